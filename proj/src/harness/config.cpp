// SPDX-License-Identifier: Apache-2.0
#include "evsched/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace evsched::harness {

namespace pt = boost::property_tree;

std::string to_string(Algorithm a) {
    switch (a) {
    case Algorithm::EC: return "EC";
    case Algorithm::OA: return "OA";
    case Algorithm::AEM: return "AEM";
    case Algorithm::SCA: return "SCA";
    case Algorithm::CALC: return "CALC";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    for (Algorithm a : {Algorithm::EC, Algorithm::OA, Algorithm::AEM, Algorithm::SCA, Algorithm::CALC})
        if (to_string(a) == up)
            return a;
    throw ConfigError("unknown algorithm '" + name + "'");
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    if (algorithms.empty())
        fail("at least one algorithm is required");
    if (seeds.empty())
        fail("at least one seed is required");
    if (!(validation_tol > 0.0))
        fail("validation tolerance must be positive");
    if (!(load_cap > 0.0))
        fail("load cap must be positive");
    try {
        fleet.validate();
        price.validate();
        aem.validate();
        sca.validate();
        calc.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (std::find(algorithms.begin(), algorithms.end(), Algorithm::AEM) != algorithms.end()) {
        if (aem_levels.empty())
            fail("AEM needs at least one level count");
        for (int l : aem_levels)
            if (l < 2)
                fail("AEM level counts must be at least 2");
    }
}

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

// Reads one section and remembers which keys were consumed so leftovers
// can be reported as typos.
class Section {
public:
    Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

    std::string text(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        if (!has(key))
            return fallback;
        return trim(tree_->get<std::string>(key));
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const std::string s = text(key, "");
        if (s == "inf" || s == "infinity")
            return std::numeric_limits<double>::infinity();
        double v = 0.0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || end != s.data() + s.size())
            throw ConfigError(where(key) + ": expected a number, got '" + s + "'");
        return v;
    }

    template <class Int>
    Int integer(const std::string& key, Int fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const std::string s = text(key, "");
        // Accept 2e5-style counts as long as they are whole.
        const double v = number(key, 0.0);
        if (v != static_cast<double>(static_cast<long long>(v)) || (std::is_unsigned_v<Int> && v < 0))
            throw ConfigError(where(key) + ": expected an integer, got '" + s + "'");
        return static_cast<Int>(v);
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const std::string s = text(key, "");
        if (s == "true" || s == "yes" || s == "1")
            return true;
        if (s == "false" || s == "no" || s == "0")
            return false;
        throw ConfigError(where(key) + ": expected true or false, got '" + s + "'");
    }

    void reject_unknown() const {
        if (!tree_)
            return;
        for (const auto& [key, child] : *tree_) {
            (void)child;
            if (!used_.count(key))
                throw ConfigError("unknown key " + where(key));
        }
    }

    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

private:
    const pt::ptree* tree_;
    std::string name_;
    std::set<std::string> used_;
};

rl::TrainConfig read_train(Section& s, rl::TrainConfig c) {
    c.beta_a = s.number("beta_a", c.beta_a);
    c.beta_c = s.number("beta_c", c.beta_c);
    c.discount = s.number("discount", c.discount);
    c.k_max = s.integer<std::uint64_t>("k_max_steps", c.k_max);
    c.n_workers = s.integer<int>("n_workers", c.n_workers);
    c.update_period = s.integer<int>("update_period_steps", c.update_period);
    c.actor_hidden = s.integer<int>("actor_hidden_units", c.actor_hidden);
    c.critic_hidden = s.integer<int>("critic_hidden_units", c.critic_hidden);
    c.log_sigma_init = s.number("log_sigma_init", c.log_sigma_init);
    c.local_updates = s.boolean("local_updates", c.local_updates);
    c.reward_scale = s.number("reward_scale", c.reward_scale);
    c.grad_clip = s.number("grad_clip", c.grad_clip);
    c.lr_decay_power = s.number("lr_decay_power", c.lr_decay_power);
    c.lr_decay_t0 = s.number("lr_decay_t0_steps", c.lr_decay_t0);
    c.require_robbins_monro = s.boolean("require_robbins_monro", c.require_robbins_monro);
    c.moving_window = s.integer<int>("moving_window_episodes", c.moving_window);
    c.divergence_factor = s.number("divergence_factor", c.divergence_factor);
    c.divergence_windows = s.integer<int>("divergence_windows", c.divergence_windows);

    const std::string reward = s.text("reward", "exact");
    if (reward == "exact")
        c.reward = RewardMode::ExactCost;
    else if (reward == "per-ev")
        c.reward = RewardMode::PaperEq13;
    else
        throw ConfigError(s.where("reward") + ": expected exact or per-ev");

    const std::string critic = s.text("critic", "mlp");
    if (critic == "mlp")
        c.critic = rl::CriticKind::Mlp;
    else if (critic == "compatible")
        c.critic = rl::CriticKind::Compatible;
    else
        throw ConfigError(s.where("critic") + ": expected mlp or compatible");

    const std::string ordering = s.text("ordering", "round-robin");
    if (ordering == "round-robin")
        c.ordering = rl::Ordering::RoundRobin;
    else if (ordering == "free")
        c.ordering = rl::Ordering::Free;
    else
        throw ConfigError(s.where("ordering") + ": expected round-robin or free");
    return c;
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    static const std::set<std::string> known{"scenario", "price", "run", "aem", "sca", "calc"};
    for (const auto& [name, child] : tree) {
        if (!known.count(name))
            throw ConfigError("unknown section [" + name + "]");
        if (child.data() != "" && child.empty())
            throw ConfigError("key '" + name + "' outside any section");
    }
    auto section = [&](const std::string& name) {
        const auto it = tree.find(name);
        return Section(it == tree.not_found() ? nullptr : &it->second, name);
    };

    ExperimentConfig cfg;

    Section sc = section("scenario");
    const int horizon = sc.integer<int>("horizon_slots", 48);
    if (horizon < 1)
        throw ConfigError(sc.where("horizon_slots") + ": must be positive");
    cfg.fleet.n_evs = sc.integer<int>("n_evs", cfg.fleet.n_evs);
    try {
        cfg.fleet.ev_type = parse_ev_type(sc.text("ev_type", "type1"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(sc.where("ev_type") + ": " + e.what());
    }
    const int dwell_min = sc.integer<int>("dwell_min_slots", 4);
    const int dwell_max = sc.integer<int>("dwell_max_slots", 12);
    if (dwell_min < 1 || dwell_max < dwell_min)
        throw ConfigError(sc.where("dwell_min_slots") + ": need 1 <= dwell_min_slots <= dwell_max_slots");
    cfg.fleet.dwell = DwellDistribution::uniform(dwell_min, dwell_max);
    const std::string arrival = sc.text("arrival", "evening-peak");
    if (arrival == "evening-peak")
        cfg.fleet.arrival = ArrivalDistribution::evening_peak(horizon);
    else if (arrival == "uniform")
        cfg.fleet.arrival = ArrivalDistribution::uniform(horizon);
    else
        throw ConfigError(sc.where("arrival") + ": expected evening-peak or uniform");
    const std::string soc = sc.text("soc", "mid-centred");
    if (soc != "mid-centred")
        throw ConfigError(sc.where("soc") + ": expected mid-centred");
    cfg.fleet.soc = SocDistribution::mid_centred();
    cfg.base_load_path = sc.text("base_load_path", "");
    if (cfg.base_load_path.empty())
        throw ConfigError(sc.where("base_load_path") + ": required");
    cfg.load_cap = sc.number("load_cap_kwh", cfg.load_cap);
    const std::string training = sc.text("training_fleets", "fresh");
    if (training == "fresh")
        cfg.training = TrainingSource::Fresh;
    else if (training == "fixed")
        cfg.training = TrainingSource::Fixed;
    else
        throw ConfigError(sc.where("training_fleets") + ": expected fresh or fixed");
    sc.reject_unknown();

    Section pr = section("price");
    cfg.price.k0 = pr.number("k0_per_kwh", cfg.price.k0);
    cfg.price.k1 = pr.number("k1_per_kwh2", cfg.price.k1);
    pr.reject_unknown();

    Section run = section("run");
    for (const auto& a : split_list(run.text("algorithms", "")))
        cfg.algorithms.push_back(parse_algorithm(a));
    for (const auto& s : split_list(run.text("seeds", ""))) {
        std::uint64_t v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || end != s.data() + s.size())
            throw ConfigError(run.where("seeds") + ": bad seed '" + s + "'");
        cfg.seeds.push_back(v);
    }
    cfg.output_dir = run.text("output_dir", cfg.output_dir.string());
    cfg.validation_tol = run.number("validation_tol_kwh", cfg.validation_tol);
    run.reject_unknown();

    Section aem = section("aem");
    cfg.aem.learning_rate = aem.number("learning_rate", cfg.aem.learning_rate);
    cfg.aem.discount = aem.number("discount", cfg.aem.discount);
    cfg.aem.epsilon_start = aem.number("epsilon_start", cfg.aem.epsilon_start);
    cfg.aem.epsilon_end = aem.number("epsilon_end", cfg.aem.epsilon_end);
    cfg.aem.epsilon_decay_fraction = aem.number("epsilon_decay_fraction", cfg.aem.epsilon_decay_fraction);
    cfg.aem.episodes = aem.integer<int>("episodes", cfg.aem.episodes);
    if (aem.has("levels")) {
        cfg.aem_levels.clear();
        for (const auto& s : split_list(aem.text("levels", ""))) {
            int v = 0;
            const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || end != s.data() + s.size())
                throw ConfigError(aem.where("levels") + ": bad level count '" + s + "'");
            cfg.aem_levels.push_back(v);
        }
    }
    aem.reject_unknown();

    Section sca = section("sca");
    cfg.sca = read_train(sca, cfg.sca);
    sca.reject_unknown();
    Section calc = section("calc");
    cfg.calc = read_train(calc, cfg.calc);
    calc.reject_unknown();

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace evsched::harness
