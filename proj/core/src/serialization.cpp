#include "lps/serialization.hpp"

#include <stdexcept>

namespace lps {

using nlohmann::json;

json measure_to_json(const Measure& m) {
    json j;
    j["atoms"] = json::array();
    for (const Atom& a : m.atoms()) j["atoms"].push_back({a.location, a.weight});
    j["pieces"] = json::array();
    for (const PolyPiece& p : m.poly_pieces()) {
        j["pieces"].push_back({p.a, p.b, {p.coeffs[0], p.coeffs[1], p.coeffs[2], p.coeffs[3]}});
    }
    const auto& exps = m.exp_pieces();
    if (exps.empty()) {
        j["exp_tail"] = nullptr;
    } else if (exps.size() == 1) {
        j["exp_tail"] = {exps[0].start, exps[0].rate, exps[0].scale};
    } else {
        json list = json::array();
        for (const ExpPiece& e : exps) list.push_back({e.start, e.rate, e.scale});
        j["exp_tail"] = list;
    }
    return j;
}

Measure measure_from_json(const json& j) {
    Measure m;
    for (const auto& a : j.at("atoms")) {
        m.add_atom(a.at(0).get<double>(), a.at(1).get<double>());
    }
    for (const auto& p : j.at("pieces")) {
        const auto& c = p.at(2);
        m.add_poly_piece(p.at(0).get<double>(), p.at(1).get<double>(),
                         {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>(),
                          c.at(3).get<double>()});
    }
    const auto& et = j.at("exp_tail");
    if (!et.is_null()) {
        if (!et.empty() && et.at(0).is_array()) {
            for (const auto& e : et) {
                m.add_exp_piece(e.at(0).get<double>(), e.at(1).get<double>(),
                                e.at(2).get<double>());
            }
        } else {
            m.add_exp_piece(et.at(0).get<double>(), et.at(1).get<double>(),
                            et.at(2).get<double>());
        }
    }
    m.finalize();
    return m;
}

json distribution_to_json(const DistributionSpec& s) {
    json params;
    const std::vector<double>& v = s.params();
    switch (s.family()) {
    case Family::Exponential:
        params["rate"] = v[0];
        break;
    case Family::HyperExponential: {
        std::size_t n = static_cast<std::size_t>(v[0]);
        params["probs"] = std::vector<double>(v.begin() + 1, v.begin() + 1 + n);
        params["rates"] = std::vector<double>(v.begin() + 1 + n, v.begin() + 1 + 2 * n);
        break;
    }
    case Family::Deterministic:
        params["value"] = v[0];
        break;
    case Family::Uniform:
        params["a"] = v[0];
        params["b"] = v[1];
        break;
    case Family::LogNormalTruncated:
        params["mu"] = v[0];
        params["sigma"] = v[1];
        params["cap"] = v[2];
        break;
    }
    return json{{"family", s.family_name()}, {"params", params}, {"p", s.p()}};
}

DistributionSpec distribution_from_json(const json& j) {
    std::string fam = j.at("family").get<std::string>();
    const json& params = j.at("params");
    double p = j.value("p", 0.5);
    if (fam == "exp") {
        return DistributionSpec::exponential(params.at("rate").get<double>(), p);
    }
    if (fam == "hyperexp") {
        return DistributionSpec::hyper_exponential(params.at("probs").get<std::vector<double>>(),
                                                   params.at("rates").get<std::vector<double>>(),
                                                   p);
    }
    if (fam == "det") {
        return DistributionSpec::deterministic(params.at("value").get<double>(), p);
    }
    if (fam == "uniform") {
        return DistributionSpec::uniform(params.at("a").get<double>(),
                                         params.at("b").get<double>(), p);
    }
    if (fam == "lognormal") {
        std::optional<double> cap;
        if (params.contains("cap") && !params.at("cap").is_null()) {
            cap = params.at("cap").get<double>();
        }
        return DistributionSpec::lognormal_truncated(params.at("mu").get<double>(),
                                                     params.at("sigma").get<double>(), cap, p);
    }
    throw std::invalid_argument("distribution_from_json: unknown family '" + fam + "'");
}

} // namespace lps
