#include "bsdelab/problem_io.hpp"

#include <fstream>

namespace bsdelab {

namespace {

RegularityParams params_from_json(const nlohmann::json& j) {
    RegularityParams p;
    auto get = [&](const char* name, double& field) {
        if (j.contains(name)) field = j.at(name).get<double>();
    };
    get("l", p.l);
    get("r", p.r);
    get("alpha", p.alpha);
    get("beta", p.beta);
    get("gamma", p.gamma);
    get("K_b", p.K_b);
    get("K_f_y", p.K_f_y);
    get("K_f_x", p.K_f_x);
    get("K_f_z", p.K_f_z);
    get("K_g", p.K_g);
    get("sigma_sup", p.sigma_sup);
    get("kappa", p.kappa);
    get("M_sigma", p.M_sigma);
    get("K_sigma", p.K_sigma);
    get("M_f", p.M_f);
    get("M_g", p.M_g);
    get("T", p.T);
    get("envelope_C", p.envelope_C);
    return p;
}

nlohmann::json params_to_json(const RegularityParams& p) {
    return {{"l", p.l},         {"r", p.r},
            {"alpha", p.alpha}, {"beta", p.beta},
            {"gamma", p.gamma}, {"K_b", p.K_b},
            {"K_f_y", p.K_f_y}, {"K_f_x", p.K_f_x},
            {"K_f_z", p.K_f_z}, {"K_g", p.K_g},
            {"sigma_sup", p.sigma_sup}, {"kappa", p.kappa},
            {"M_sigma", p.M_sigma}, {"K_sigma", p.K_sigma},
            {"M_f", p.M_f},     {"M_g", p.M_g},
            {"T", p.T},         {"envelope_C", p.envelope_C}};
}

} // namespace

ProblemSpec problem_from_json(const nlohmann::json& j) {
    ProblemSpec spec;
    spec.d = j.at("d").get<int>();
    spec.T = j.at("T").get<double>();
    if (j.at("x0").is_number())
        spec.x0 = {j.at("x0").get<double>()};
    else
        spec.x0 = j.at("x0").get<std::vector<double>>();

    auto strings_for = [&](const char* key, int count) {
        std::vector<std::string> out;
        const auto& v = j.at(key);
        if (v.is_string()) {
            if (count != 1)
                throw SpecError(std::string(key) + " must list one expression per entry");
            out.push_back(v.get<std::string>());
        } else {
            out = v.get<std::vector<std::string>>();
            if (static_cast<int>(out.size()) != count)
                throw SpecError(std::string(key) + " must have " + std::to_string(count) +
                                " entries");
        }
        return out;
    };

    for (const auto& s : strings_for("b", spec.d))
        spec.b.push_back(parse_coefficient(s, Slot::Drift));

    const auto& sj = j.at("sigma");
    if (sj.is_string()) {
        if (spec.d != 1) throw SpecError("sigma must be a d x d matrix of expressions");
        spec.sigma.push_back(parse_coefficient(sj.get<std::string>(), Slot::Diffusion));
    } else {
        const auto rows = sj.get<std::vector<std::vector<std::string>>>();
        if (static_cast<int>(rows.size()) != spec.d)
            throw SpecError("sigma must have d rows");
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != spec.d)
                throw SpecError("sigma rows must have d entries");
            for (const auto& s : row)
                spec.sigma.push_back(parse_coefficient(s, Slot::Diffusion));
        }
    }

    spec.f = parse_coefficient(j.at("f").get<std::string>(), Slot::Driver);
    spec.g = parse_coefficient(j.at("g").get<std::string>(), Slot::Terminal);
    if (j.contains("params")) spec.params = params_from_json(j.at("params"));
    spec.params.T = spec.T;
    spec.regime = regime_from_name(j.at("regime").get<std::string>());
    if (j.contains("catalog")) spec.catalog_tag = j.at("catalog").get<std::string>();
    if (j.contains("catalog_args"))
        spec.catalog_args = j.at("catalog_args").get<std::vector<double>>();
    spec.validate();
    return spec;
}

nlohmann::json problem_to_json(const ProblemSpec& spec) {
    nlohmann::json j;
    j["d"] = spec.d;
    j["T"] = spec.T;
    j["x0"] = spec.x0;
    std::vector<std::string> bs;
    for (const auto& e : spec.b) bs.push_back(e.to_string());
    j["b"] = bs;
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < spec.d; ++i) {
        std::vector<std::string> row;
        for (int k = 0; k < spec.d; ++k)
            row.push_back(spec.sigma[static_cast<std::size_t>(i * spec.d + k)].to_string());
        rows.push_back(std::move(row));
    }
    j["sigma"] = rows;
    j["f"] = spec.f.to_string();
    j["g"] = spec.g.to_string();
    j["params"] = params_to_json(spec.params);
    j["regime"] = regime_name(spec.regime);
    if (!spec.catalog_tag.empty()) {
        j["catalog"] = spec.catalog_tag;
        j["catalog_args"] = spec.catalog_args;
    }
    return j;
}

ProblemSpec load_problem(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open problem file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& err) {
        throw SpecError("malformed problem file '" + path.string() + "': " + err.what());
    }
    try {
        return problem_from_json(j);
    } catch (const nlohmann::json::exception& err) {
        throw SpecError("invalid problem file '" + path.string() + "': " + err.what());
    }
}

void save_problem(const ProblemSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open '" + path.string() + "' for writing");
    out << problem_to_json(spec).dump(2) << '\n';
}

} // namespace bsdelab
