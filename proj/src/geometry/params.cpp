#include <cmath>
#include <set>

#include "forge/geometry.hpp"

namespace forge::geometry {

namespace {

double pow10(int d) {
    double p = 1.0;
    for (int i = 0; i < d; ++i) p *= 10.0;
    return p;
}

std::int64_t real_steps(const RealInterval& r) {
    return static_cast<std::int64_t>(std::llround((r.hi - r.lo) * pow10(r.decimals)));
}

double real_at(const RealInterval& r, std::int64_t step) {
    const double scale = pow10(r.decimals);
    return static_cast<double>(std::llround(r.lo * scale) + step) / scale;
}

}  // namespace

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::int64_t SplitMix64::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + x % span);
}

std::uint64_t mix_seed(std::uint64_t batch_seed, std::uint64_t index) {
    SplitMix64 a(batch_seed);
    const std::uint64_t h = a.next();
    SplitMix64 b(h ^ (index * 0xD1B54A32D192ED03ULL));
    return b.next();
}

void ParameterSpace::validate() const {
    std::set<std::string> names;
    for (const auto& d : dimensions) {
        if (d.name.empty()) throw Error(ErrorKind::SchemaError, "dimension without a name");
        if (!names.insert(d.name).second) throw Error(ErrorKind::SchemaError, "duplicate dimension " + d.name);
        std::visit(
            [&](const auto& dom) {
                using T = std::decay_t<decltype(dom)>;
                if constexpr (std::is_same_v<T, IntRange>) {
                    if (dom.lo > dom.hi) throw Error(ErrorKind::SchemaError, d.name + ": empty integer range");
                } else if constexpr (std::is_same_v<T, RealInterval>) {
                    if (!(dom.lo <= dom.hi)) throw Error(ErrorKind::SchemaError, d.name + ": empty interval");
                    if (dom.decimals < 0 || dom.decimals > 9) {
                        throw Error(ErrorKind::SchemaError, d.name + ": decimals must be 0..9");
                    }
                } else {
                    if (dom.values.empty()) throw Error(ErrorKind::SchemaError, d.name + ": empty enum");
                }
            },
            d.domain);
    }
}

const Dimension* ParameterSpace::find(std::string_view name) const {
    for (const auto& d : dimensions) {
        if (d.name == name) return &d;
    }
    return nullptr;
}

ParameterSpace parameter_space_from_json(const json& j) {
    ParameterSpace space;
    for (const auto& d : j) {
        Dimension dim;
        dim.name = d.at("name").get<std::string>();
        if (d.contains("int")) {
            dim.domain = IntRange{d["int"].at(0).get<std::int64_t>(), d["int"].at(1).get<std::int64_t>()};
        } else if (d.contains("real")) {
            dim.domain = RealInterval{d["real"].at(0).get<double>(), d["real"].at(1).get<double>(), d.value("decimals", 2)};
        } else if (d.contains("enum")) {
            dim.domain = EnumSet{d["enum"].get<std::vector<std::string>>()};
        } else {
            throw Error(ErrorKind::SchemaError, dim.name + ": expected int, real or enum domain");
        }
        space.dimensions.push_back(std::move(dim));
    }
    space.validate();
    return space;
}

json to_json(const ParameterSpace& space) {
    json out = json::array();
    for (const auto& d : space.dimensions) {
        json j = {{"name", d.name}};
        std::visit(
            [&](const auto& dom) {
                using T = std::decay_t<decltype(dom)>;
                if constexpr (std::is_same_v<T, IntRange>) {
                    j["int"] = {dom.lo, dom.hi};
                } else if constexpr (std::is_same_v<T, RealInterval>) {
                    j["real"] = {dom.lo, dom.hi};
                    j["decimals"] = dom.decimals;
                } else {
                    j["enum"] = dom.values;
                }
            },
            d.domain);
        out.push_back(std::move(j));
    }
    return out;
}

json sample_parameters(const ParameterSpace& space, std::uint64_t seed) {
    SplitMix64 rng(seed);
    json out = json::object();
    // One draw per dimension in declaration order.
    for (const auto& d : space.dimensions) {
        std::visit(
            [&](const auto& dom) {
                using T = std::decay_t<decltype(dom)>;
                if constexpr (std::is_same_v<T, IntRange>) {
                    out[d.name] = rng.uniform_int(dom.lo, dom.hi);
                } else if constexpr (std::is_same_v<T, RealInterval>) {
                    out[d.name] = real_at(dom, rng.uniform_int(0, real_steps(dom)));
                } else {
                    const auto i = rng.uniform_int(0, static_cast<std::int64_t>(dom.values.size()) - 1);
                    out[d.name] = dom.values[static_cast<std::size_t>(i)];
                }
            },
            d.domain);
    }
    return out;
}

void check_parameters(const ParameterSpace& space, const json& params) {
    if (!params.is_object()) throw Error(ErrorKind::ParameterOutOfDomain, "parameters must be an object");
    for (const auto& [key, _] : params.items()) {
        if (!space.find(key)) throw Error(ErrorKind::ParameterOutOfDomain, "unknown parameter " + key);
    }
    for (const auto& d : space.dimensions) {
        if (!params.contains(d.name)) throw Error(ErrorKind::ParameterOutOfDomain, "missing parameter " + d.name);
        const json& v = params.at(d.name);
        std::visit(
            [&](const auto& dom) {
                using T = std::decay_t<decltype(dom)>;
                if constexpr (std::is_same_v<T, IntRange>) {
                    if (!v.is_number_integer() || v.get<std::int64_t>() < dom.lo || v.get<std::int64_t>() > dom.hi) {
                        throw Error(ErrorKind::ParameterOutOfDomain,
                                    d.name + "=" + v.dump() + " not in [" + std::to_string(dom.lo) + ", " +
                                        std::to_string(dom.hi) + "]");
                    }
                } else if constexpr (std::is_same_v<T, RealInterval>) {
                    if (!v.is_number()) throw Error(ErrorKind::ParameterOutOfDomain, d.name + " must be a number");
                    const double x = v.get<double>();
                    if (!std::isfinite(x) || x < dom.lo - 1e-12 || x > dom.hi + 1e-12) {
                        throw Error(ErrorKind::ParameterOutOfDomain, d.name + "=" + v.dump() + " outside interval");
                    }
                    const double scaled = x * pow10(dom.decimals);
                    if (std::fabs(scaled - std::round(scaled)) > 1e-6) {
                        throw Error(ErrorKind::ParameterOutOfDomain,
                                    d.name + "=" + v.dump() + " has more than " + std::to_string(dom.decimals) +
                                        " decimals");
                    }
                } else {
                    if (!v.is_string() ||
                        std::find(dom.values.begin(), dom.values.end(), v.get<std::string>()) == dom.values.end()) {
                        throw Error(ErrorKind::ParameterOutOfDomain, d.name + "=" + v.dump() + " not in enum");
                    }
                }
            },
            d.domain);
    }
}

std::vector<json> corner_samples(const ParameterSpace& space) {
    json lo = json::object();
    json hi = json::object();
    for (const auto& d : space.dimensions) {
        std::visit(
            [&](const auto& dom) {
                using T = std::decay_t<decltype(dom)>;
                if constexpr (std::is_same_v<T, IntRange>) {
                    lo[d.name] = dom.lo;
                    hi[d.name] = dom.hi;
                } else if constexpr (std::is_same_v<T, RealInterval>) {
                    lo[d.name] = real_at(dom, 0);
                    hi[d.name] = real_at(dom, real_steps(dom));
                } else {
                    lo[d.name] = dom.values.front();
                    hi[d.name] = dom.values.back();
                }
            },
            d.domain);
    }
    return {lo, hi};
}

}  // namespace forge::geometry
