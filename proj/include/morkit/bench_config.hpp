#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "morkit/autoencoder.hpp"
#include "morkit/errors.hpp"
#include "morkit/kpca.hpp"
#include "morkit/pod.hpp"
#include "morkit/registration.hpp"
#include "morkit/snapshots.hpp"

namespace mor {

struct CaseSpec {
    std::string label;
    double c_T = 0.0;
    double c_D = 0.0;
};

/// Full benchmark configuration; the CLI reads it from an INI-style file
/// with one section per module. Unknown sections or keys are rejected.
struct BenchConfig {
    std::string output_dir = "out";
    std::uint64_t seed = 20250809;
    std::size_t n_train = 20;
    std::size_t n_test = 200;
    std::size_t n_min = 1;
    std::size_t n_max = 15;
    bool svg = false;

    Grid1D grid{-1.0, 3.0, 256};
    double sigma0 = 0.1;
    double t_final = 0.5;

    InnerProduct inner_product = InnerProduct::trapezoid;
    KernelHyper kpca;
    RegistrationHyper registration;

    LossKind ae_loss = LossKind::vanilla;
    double ae_lambda = 1e-4;
    TrainConfig ae_train;

    double krr_shape = 0.0;  // 0 = 2 / (t_max - t_min)
    double krr_ridge = 1e-10;

    std::vector<CaseSpec> cases;

    void validate() const {
        if (n_train < 2) throw ValidationError("config: n_train must be >= 2");
        if (n_test < 2) throw ValidationError("config: n_test must be >= 2");
        if (n_min < 1) throw ValidationError("config: n_min must be >= 1");
        if (n_max < n_min) throw ValidationError("config: n_max must be >= n_min");
        if (n_max > n_train - 1) throw ValidationError("config: n_max must be <= n_train - 1");
        grid.validate();
        if (!(sigma0 > 0.0)) throw ValidationError("config: sigma0 must be positive");
        if (!(t_final > 0.0)) throw ValidationError("config: t_final must be positive");
        registration.validate();
        if (cases.empty()) throw ValidationError("config: no cases defined");
        for (std::size_t i = 0; i < cases.size(); ++i)
            for (std::size_t j = i + 1; j < cases.size(); ++j)
                if (cases[i].label == cases[j].label)
                    throw ValidationError("config: duplicate case label " + cases[i].label);
    }

    double krr_shape_resolved() const {
        return krr_shape > 0.0 ? krr_shape : 2.0 / t_final;
    }

    AdvDiffConfig case_config(const CaseSpec& spec) const {
        AdvDiffConfig c;
        c.c_T = spec.c_T;
        c.c_D = spec.c_D;
        c.sigma0 = sigma0;
        c.t_final = t_final;
        return c;
    }
};

inline BenchConfig default_bench_config() {
    BenchConfig cfg;
    cfg.cases = {{"advection", 4.0, 0.0}, {"diffusion", 0.0, 0.1}, {"advection_diffusion", 4.0, 0.1}};
    cfg.ae_train.epochs = 5000;  // per-N retraining keeps a full sweep tractable
    return cfg;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline double to_double(const std::string& v, std::size_t line) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ValidationError("config: bad number '" + v + "' at line " + std::to_string(line));
    return x;
}

inline std::uint64_t to_u64(const std::string& v, std::size_t line) {
    const double x = to_double(v, line);
    if (x < 0.0) throw ValidationError("config: expected non-negative integer at line " + std::to_string(line));
    return static_cast<std::uint64_t>(x);
}

inline bool to_bool(const std::string& v, std::size_t line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config: bad boolean '" + v + "' at line " + std::to_string(line));
}

}  // namespace detail

/// Parse the INI-style configuration text. Sections/keys outside the schema
/// fail fast with the offending line number.
inline BenchConfig parse_bench_config(const std::string& text) {
    BenchConfig cfg = default_bench_config();
    cfg.cases.clear();
    bool any_case_section = false;

    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    CaseSpec* current_case = nullptr;

    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError("config: malformed section at line " + std::to_string(line_no));
            section = detail::trim(line.substr(1, line.size() - 2));
            current_case = nullptr;
            if (section.rfind("case ", 0) == 0) {
                CaseSpec spec;
                spec.label = detail::trim(section.substr(5));
                if (spec.label.empty())
                    throw ValidationError("config: empty case label at line " + std::to_string(line_no));
                cfg.cases.push_back(spec);
                current_case = &cfg.cases.back();
                any_case_section = true;
            } else if (section != "bench" && section != "grid" && section != "snapshots" &&
                       section != "pod" && section != "kpca" && section != "registration" &&
                       section != "autoencoder" && section != "krr") {
                throw ValidationError("config: unknown section [" + section + "] at line " +
                                      std::to_string(line_no));
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: expected key = value at line " + std::to_string(line_no));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ValidationError("config: empty key or value at line " + std::to_string(line_no));

        auto unknown = [&]() -> ValidationError {
            return ValidationError("config: unknown key '" + key + "' in [" + section + "] at line " +
                                   std::to_string(line_no));
        };

        if (current_case) {
            if (key == "c_T") current_case->c_T = detail::to_double(val, line_no);
            else if (key == "c_D") current_case->c_D = detail::to_double(val, line_no);
            else throw unknown();
        } else if (section == "bench") {
            if (key == "output_dir") cfg.output_dir = val;
            else if (key == "seed") cfg.seed = detail::to_u64(val, line_no);
            else if (key == "n_train") cfg.n_train = detail::to_u64(val, line_no);
            else if (key == "n_test") cfg.n_test = detail::to_u64(val, line_no);
            else if (key == "n_min") cfg.n_min = detail::to_u64(val, line_no);
            else if (key == "n_max") cfg.n_max = detail::to_u64(val, line_no);
            else if (key == "svg") cfg.svg = detail::to_bool(val, line_no);
            else throw unknown();
        } else if (section == "grid") {
            if (key == "x_min") cfg.grid.x_min = detail::to_double(val, line_no);
            else if (key == "x_max") cfg.grid.x_max = detail::to_double(val, line_no);
            else if (key == "n_points") cfg.grid.n_points = detail::to_u64(val, line_no);
            else throw unknown();
        } else if (section == "snapshots") {
            if (key == "sigma0") cfg.sigma0 = detail::to_double(val, line_no);
            else if (key == "t_final") cfg.t_final = detail::to_double(val, line_no);
            else throw unknown();
        } else if (section == "pod") {
            if (key == "inner_product") {
                if (val == "trapezoid") cfg.inner_product = InnerProduct::trapezoid;
                else if (val == "euclidean") cfg.inner_product = InnerProduct::euclidean;
                else throw ValidationError("config: inner_product must be trapezoid|euclidean at line " +
                                           std::to_string(line_no));
            } else throw unknown();
        } else if (section == "kpca") {
            if (key == "k_neighbors") cfg.kpca.k_neighbors = detail::to_u64(val, line_no);
            else if (key == "weight_scale") cfg.kpca.weight_scale = detail::to_double(val, line_no);
            else if (key == "lle_reg") cfg.kpca.lle_reg = detail::to_double(val, line_no);
            else if (key == "rank_tol") cfg.kpca.rank_tol = detail::to_double(val, line_no);
            else throw unknown();
        } else if (section == "registration") {
            if (key == "n_basis") cfg.registration.n_basis = detail::to_u64(val, line_no);
            else if (key == "xi") cfg.registration.xi = detail::to_double(val, line_no);
            else if (key == "eps_jac") cfg.registration.eps_jac = detail::to_double(val, line_no);
            else if (key == "c_jac") cfg.registration.c_jac = detail::to_double(val, line_no);
            else if (key == "delta") cfg.registration.delta = detail::to_double(val, line_no);
            else if (key == "penalty_weight") cfg.registration.penalty_weight = detail::to_double(val, line_no);
            else if (key == "max_iters") cfg.registration.max_iters = detail::to_u64(val, line_no);
            else if (key == "grad_tol") cfg.registration.grad_tol = detail::to_double(val, line_no);
            else if (key == "use_lbfgs") cfg.registration.use_lbfgs = detail::to_bool(val, line_no);
            else throw unknown();
        } else if (section == "autoencoder") {
            if (key == "loss") {
                if (val == "vanilla") cfg.ae_loss = LossKind::vanilla;
                else if (val == "sparse") cfg.ae_loss = LossKind::sparse;
                else if (val == "contractive") cfg.ae_loss = LossKind::contractive;
                else throw ValidationError("config: loss must be vanilla|sparse|contractive at line " +
                                           std::to_string(line_no));
            } else if (key == "lambda_reg") cfg.ae_lambda = detail::to_double(val, line_no);
            else if (key == "learning_rate") cfg.ae_train.learning_rate = detail::to_double(val, line_no);
            else if (key == "epochs") cfg.ae_train.epochs = detail::to_u64(val, line_no);
            else if (key == "batch") cfg.ae_train.batch = detail::to_u64(val, line_no);
            else if (key == "init_gain") cfg.ae_train.init_gain = detail::to_double(val, line_no);
            else if (key == "norm_floor_rel") cfg.ae_train.norm_floor_rel = detail::to_double(val, line_no);
            else throw unknown();
        } else if (section == "krr") {
            if (key == "rbf_shape") cfg.krr_shape = detail::to_double(val, line_no);
            else if (key == "ridge") cfg.krr_ridge = detail::to_double(val, line_no);
            else throw unknown();
        } else {
            throw ValidationError("config: key '" + key + "' outside any section at line " +
                                  std::to_string(line_no));
        }
    }

    if (!any_case_section) cfg.cases = default_bench_config().cases;
    cfg.validate();
    return cfg;
}

/// Load from a path, or return the built-in defaults for the literal "default".
inline BenchConfig load_bench_config(const std::string& path_or_default) {
    if (path_or_default == "default") return default_bench_config();
    std::ifstream in(path_or_default);
    if (!in) throw ValidationError("config: cannot open file " + path_or_default);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_bench_config(ss.str());
}

/// Canonical text form, echoed into the manifest.
inline std::string serialize_bench_config(const BenchConfig& cfg) {
    using detail::fmt17;
    std::ostringstream out;
    out << "[bench]\n"
        << "output_dir = " << cfg.output_dir << "\n"
        << "seed = " << cfg.seed << "\n"
        << "n_train = " << cfg.n_train << "\n"
        << "n_test = " << cfg.n_test << "\n"
        << "n_min = " << cfg.n_min << "\n"
        << "n_max = " << cfg.n_max << "\n"
        << "svg = " << (cfg.svg ? "true" : "false") << "\n\n";
    out << "[grid]\n"
        << "x_min = " << fmt17(cfg.grid.x_min) << "\n"
        << "x_max = " << fmt17(cfg.grid.x_max) << "\n"
        << "n_points = " << cfg.grid.n_points << "\n\n";
    out << "[snapshots]\n"
        << "sigma0 = " << fmt17(cfg.sigma0) << "\n"
        << "t_final = " << fmt17(cfg.t_final) << "\n\n";
    out << "[pod]\n"
        << "inner_product = "
        << (cfg.inner_product == InnerProduct::trapezoid ? "trapezoid" : "euclidean") << "\n\n";
    out << "[kpca]\n"
        << "k_neighbors = " << cfg.kpca.k_neighbors << "\n"
        << "weight_scale = " << fmt17(cfg.kpca.weight_scale) << "\n"
        << "lle_reg = " << fmt17(cfg.kpca.lle_reg) << "\n"
        << "rank_tol = " << fmt17(cfg.kpca.rank_tol) << "\n\n";
    out << "[registration]\n"
        << "n_basis = " << cfg.registration.n_basis << "\n"
        << "xi = " << fmt17(cfg.registration.xi) << "\n"
        << "eps_jac = " << fmt17(cfg.registration.eps_jac) << "\n"
        << "c_jac = " << fmt17(cfg.registration.c_jac) << "\n"
        << "delta = " << fmt17(cfg.registration.delta) << "\n"
        << "penalty_weight = " << fmt17(cfg.registration.penalty_weight) << "\n"
        << "max_iters = " << cfg.registration.max_iters << "\n"
        << "grad_tol = " << fmt17(cfg.registration.grad_tol) << "\n"
        << "use_lbfgs = " << (cfg.registration.use_lbfgs ? "true" : "false") << "\n\n";
    out << "[autoencoder]\n"
        << "loss = " << to_string(cfg.ae_loss) << "\n"
        << "lambda_reg = " << fmt17(cfg.ae_lambda) << "\n"
        << "learning_rate = " << fmt17(cfg.ae_train.learning_rate) << "\n"
        << "epochs = " << cfg.ae_train.epochs << "\n"
        << "batch = " << cfg.ae_train.batch << "\n"
        << "init_gain = " << fmt17(cfg.ae_train.init_gain) << "\n"
        << "norm_floor_rel = " << fmt17(cfg.ae_train.norm_floor_rel) << "\n\n";
    out << "[krr]\n"
        << "rbf_shape = " << fmt17(cfg.krr_shape) << "\n"
        << "ridge = " << fmt17(cfg.krr_ridge) << "\n";
    for (const auto& spec : cfg.cases)
        out << "\n[case " << spec.label << "]\n"
            << "c_T = " << fmt17(spec.c_T) << "\n"
            << "c_D = " << fmt17(spec.c_D) << "\n";
    return out.str();
}

}  // namespace mor
