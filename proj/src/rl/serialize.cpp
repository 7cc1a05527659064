// SPDX-License-Identifier: Apache-2.0
#include "evsched/rl/serialize.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace evsched::rl {

std::uint64_t config_hash(const TrainConfig& cfg) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : cfg.canonical()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

void write_params(const std::filesystem::path& path, const std::string& kind, const std::vector<int>& dims,
                  std::uint64_t seed, std::uint64_t hash, const Vec& theta) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write parameters to " + path.string());
    out << "evsched-params " << kParamFormatVersion << '\n' << "kind " << kind << '\n' << "dims";
    for (int d : dims)
        out << ' ' << d;
    out << '\n' << "seed " << seed << '\n';
    out << "config " << std::hex << std::setw(16) << std::setfill('0') << hash << std::dec << '\n';
    out << "count " << theta.size() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index k = 0; k < theta.size(); ++k)
        out << theta[k] << '\n';
    if (!out)
        throw std::runtime_error("error writing parameters to " + path.string());
}

Vec read_params(const std::filesystem::path& path, const std::string& kind, ParamHeader& header) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open parameter file " + path.string());
    auto fail = [&](const std::string& why) {
        return std::runtime_error(path.string() + ": " + why);
    };
    std::string line, key;
    auto expect = [&](const char* name) -> std::istringstream {
        if (!std::getline(in, line))
            throw fail(std::string("missing '") + name + "' line");
        std::istringstream is(line);
        is >> key;
        if (key != name)
            throw fail(std::string("expected '") + name + "', found '" + key + "'");
        return is;
    };

    {
        auto is = expect("evsched-params");
        if (!(is >> header.version))
            throw fail("malformed version");
        if (header.version != kParamFormatVersion)
            throw fail("unsupported format version " + std::to_string(header.version));
    }
    {
        auto is = expect("kind");
        is >> header.kind;
        if (header.kind != kind)
            throw fail("holds " + header.kind + " parameters, expected " + kind);
    }
    {
        auto is = expect("dims");
        header.dims.clear();
        int d = 0;
        while (is >> d)
            header.dims.push_back(d);
    }
    {
        auto is = expect("seed");
        if (!(is >> header.seed))
            throw fail("malformed seed");
    }
    {
        auto is = expect("config");
        if (!(is >> std::hex >> header.config_hash))
            throw fail("malformed config hash");
    }
    Eigen::Index count = 0;
    {
        auto is = expect("count");
        if (!(is >> count) || count < 0)
            throw fail("malformed count");
    }
    Vec theta(count);
    for (Eigen::Index k = 0; k < count; ++k) {
        if (!std::getline(in, line))
            throw fail("truncated parameter body");
        const auto [end, ec] = std::from_chars(line.data(), line.data() + line.size(), theta[k]);
        if (ec != std::errc() || end != line.data() + line.size())
            throw fail("malformed value on body line " + std::to_string(k + 1));
    }
    return theta;
}

} // namespace

void save_policy(const std::filesystem::path& path, const PolicyParams& p, std::uint64_t seed, std::uint64_t hash) {
    write_params(path, "policy", {p.input_dim, p.hidden, p.action_dim}, seed, hash, p.theta);
}

PolicyParams load_policy(const std::filesystem::path& path, ParamHeader* header) {
    ParamHeader h;
    Vec theta = read_params(path, "policy", h);
    if (h.dims.size() != 3)
        throw std::runtime_error(path.string() + ": policy needs three dims");
    PolicyParams p(h.dims[0], h.dims[2], h.dims[1]);
    if (theta.size() != p.size())
        throw std::runtime_error(path.string() + ": parameter count does not match dims");
    p.theta = std::move(theta);
    if (header)
        *header = h;
    return p;
}

void save_critic(const std::filesystem::path& path, const CriticParams& p, std::uint64_t seed, std::uint64_t hash) {
    write_params(path, "critic", {p.state_dim, p.action_dim, p.hidden}, seed, hash, p.theta);
}

CriticParams load_critic(const std::filesystem::path& path, ParamHeader* header) {
    ParamHeader h;
    Vec theta = read_params(path, "critic", h);
    if (h.dims.size() != 3)
        throw std::runtime_error(path.string() + ": critic needs three dims");
    CriticParams p(h.dims[0], h.dims[1], h.dims[2]);
    if (theta.size() != p.size())
        throw std::runtime_error(path.string() + ": parameter count does not match dims");
    p.theta = std::move(theta);
    if (header)
        *header = h;
    return p;
}

void save_training_log(const std::filesystem::path& path, const std::vector<EpisodeLog>& log) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write training log to " + path.string());
    out << "episode,steps,moving_reward,wall_ms\n";
    out << std::setprecision(10);
    for (const auto& e : log)
        out << e.episode << ',' << e.steps << ',' << e.moving_reward << ',' << e.wall_ms << '\n';
}

} // namespace evsched::rl
