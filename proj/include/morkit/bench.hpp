#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "morkit/autoencoder.hpp"
#include "morkit/bench_config.hpp"
#include "morkit/kpca.hpp"
#include "morkit/krr.hpp"
#include "morkit/pod.hpp"
#include "morkit/registration.hpp"
#include "morkit/snapshots.hpp"
#include "morkit/svg.hpp"

namespace mor {

inline const char* morkit_version() { return "0.1.0"; }

namespace bench_detail {

const std::vector<std::string> spectra_methods = {
    "pod", "pod_registered", "kpca_linear", "kpca_mds", "kpca_isomap",
    "kpca_spectral_clustering", "kpca_lle"};
const std::vector<std::string> error_methods = {"pod", "registration", "autoencoder"};
const std::vector<std::string> latent_methods = {
    "pod", "registration", "autoencoder", "kpca_linear", "kpca_mds", "kpca_isomap",
    "kpca_spectral_clustering", "kpca_lle"};

inline bool selected(const std::string& method, const std::string& filter) {
    return filter.empty() || method == filter;
}

inline void check_filters(const BenchConfig& cfg, const std::string& case_filter,
                          const std::string& method_filter,
                          const std::vector<std::string>& valid_methods) {
    if (!case_filter.empty()) {
        bool found = false;
        for (const auto& c : cfg.cases) found = found || c.label == case_filter;
        if (!found) throw ValidationError("unknown case '" + case_filter + "'");
    }
    if (!method_filter.empty()) {
        if (std::find(valid_methods.begin(), valid_methods.end(), method_filter) ==
            valid_methods.end()) {
            std::string all;
            for (const auto& m : valid_methods) all += (all.empty() ? "" : ", ") + m;
            throw ValidationError("unknown method '" + method_filter + "' (expected one of " + all + ")");
        }
    }
}

struct CaseData {
    CaseSpec spec;
    SnapshotSet train, test;
};

inline CaseData build_case(const BenchConfig& cfg, const CaseSpec& spec) {
    CaseData data;
    data.spec = spec;
    const AdvDiffConfig pde = cfg.case_config(spec);
    data.train = build_snapshot_set(pde, cfg.grid, cfg.n_train, spec.label);
    data.test = build_snapshot_set(pde, cfg.grid, cfg.n_test, spec.label);
    return data;
}

inline std::filesystem::path case_dir(const BenchConfig& cfg, const std::string& label) {
    std::filesystem::path dir = std::filesystem::path(cfg.output_dir) / label;
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw ValidationError("cannot open output file " + p.string());
    return out;
}

/// Mean over snapshots of the relative L2(Omega) reconstruction error.
inline double mean_rel_l2(const DenseMatrix& truth, const DenseMatrix& approx, const Vector& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.rows(); ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < truth.cols(); ++j) {
            const double e = approx(i, j) - truth(i, j);
            num += w[j] * e * e;
            den += w[j] * truth(i, j) * truth(i, j);
        }
        acc += std::sqrt(num / den);
    }
    return acc / static_cast<double>(truth.rows());
}

inline std::uint64_t ae_seed(const BenchConfig& cfg, std::size_t case_index, std::size_t n_modes) {
    return cfg.seed + 1000003ULL * static_cast<std::uint64_t>(case_index) +
           static_cast<std::uint64_t>(n_modes);
}

/// Training latents (rows = snapshots) on the first n_cols modes of the basis.
inline DenseMatrix latent_matrix(const ReducedBasis& basis, const SnapshotSet& set,
                                 std::size_t n_cols) {
    DenseMatrix z(set.size(), n_cols);
    for (std::size_t i = 0; i < set.size(); ++i) {
        Vector zi = project(basis, set.data.row(i), n_cols);
        for (std::size_t c = 0; c < n_cols; ++c) z(i, c) = zi[c];
    }
    return z;
}

struct RegistrationArtifacts {
    std::vector<RegistrationMap> maps;
    SnapshotSet transformed;
    ReducedBasis basis;
    DenseMatrix train_latents;   // n_train x usable modes
    DenseMatrix coeff_matrix;    // n_train x M
    std::size_t clamped_nodes = 0;
};

inline RegistrationArtifacts fit_registration_pipeline(const BenchConfig& cfg, const CaseData& data) {
    RegistrationArtifacts art;
    art.maps = fit_registration(data.train, cfg.registration, data.train.times.front());
    auto tr = transform_manifold(data.train, art.maps);
    art.transformed = std::move(tr.set);
    art.clamped_nodes = tr.clamped_nodes;
    art.basis = fit_pod(art.transformed, cfg.inner_product);
    const std::size_t usable = std::min(art.basis.mode_count(), cfg.n_max);
    art.train_latents = latent_matrix(art.basis, art.transformed, usable);
    art.coeff_matrix = DenseMatrix(data.train.size(), cfg.registration.n_basis);
    for (std::size_t i = 0; i < data.train.size(); ++i)
        for (std::size_t m = 0; m < cfg.registration.n_basis; ++m)
            art.coeff_matrix(i, m) = art.maps[i].coeffs[m];
    return art;
}

inline RegistrationMap map_from_coeffs(const Vector& coeffs, double t, const BenchConfig& cfg) {
    RegistrationMap map;
    map.kind = RegistrationMap::Kind::legendre;
    map.coeffs = coeffs;
    map.t_value = t;
    map.ref_t = 0.0;
    map.grid = cfg.grid;
    return map;
}

}  // namespace bench_detail

/// Eigenvalue-decay CSVs: one spectra.csv per case with every method's
/// spectrum normalized by its leading eigenvalue.
inline void run_spectra(const BenchConfig& cfg, const std::string& case_filter = "",
                        const std::string& method_filter = "") {
    namespace bd = bench_detail;
    cfg.validate();
    bd::check_filters(cfg, case_filter, method_filter, bd::spectra_methods);

    for (const auto& spec : cfg.cases) {
        if (!case_filter.empty() && spec.label != case_filter) continue;
        bd::CaseData data = bd::build_case(cfg, spec);

        std::vector<std::pair<std::string, Vector>> spectra;
        if (bd::selected("pod", method_filter))
            spectra.emplace_back("pod", fit_pod(data.train, cfg.inner_product).eigenvalues);
        if (bd::selected("pod_registered", method_filter)) {
            auto maps = fit_registration(data.train, cfg.registration, data.train.times.front());
            auto tr = transform_manifold(data.train, maps);
            spectra.emplace_back("pod_registered", second_moment_spectrum(tr.set, cfg.inner_product));
        }
        const std::pair<std::string, KernelKind> kernels[] = {
            {"kpca_linear", KernelKind::linear},
            {"kpca_mds", KernelKind::mds},
            {"kpca_isomap", KernelKind::isomap},
            {"kpca_spectral_clustering", KernelKind::spectral_clustering},
            {"kpca_lle", KernelKind::lle}};
        for (const auto& [name, kind] : kernels)
            if (bd::selected(name, method_filter))
                spectra.emplace_back(name, fit_kpca(data.train, kind, cfg.kpca).eigenvalues);

        auto out = bd::open_out(bd::case_dir(cfg, spec.label) / "spectra.csv");
        out << "case,method,j,lambda_j\n";
        std::vector<SvgSeries> series;
        for (const auto& [name, eigenvalues] : spectra) {
            const double lam1 = eigenvalues.empty() ? 0.0 : eigenvalues.front();
            SvgSeries s;
            s.name = name;
            for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
                const double norm = lam1 > 0.0 ? eigenvalues[j] / lam1 : eigenvalues[j];
                out << spec.label << ',' << name << ',' << (j + 1) << ',' << detail::fmt17(norm)
                    << '\n';
                s.x.push_back(static_cast<double>(j + 1));
                s.y.push_back(std::max(norm, 1e-16));
            }
            series.push_back(std::move(s));
        }
        if (cfg.svg)
            write_svg_lines((bd::case_dir(cfg, spec.label) / "spectra.svg").string(),
                            spec.label + ": normalized eigenvalue decay", series, true);
    }
}

/// Reconstruction-error CSVs over the latent-dimension sweep. Test latents
/// and test-time registration coefficients come from kernel ridge regression
/// on the training values; autoencoders are retrained per latent dimension.
inline void run_errors(const BenchConfig& cfg, const std::string& case_filter = "",
                       const std::string& method_filter = "") {
    namespace bd = bench_detail;
    cfg.validate();
    bd::check_filters(cfg, case_filter, method_filter, bd::error_methods);
    const double krr_shape = cfg.krr_shape_resolved();

    for (std::size_t case_index = 0; case_index < cfg.cases.size(); ++case_index) {
        const auto& spec = cfg.cases[case_index];
        if (!case_filter.empty() && spec.label != case_filter) continue;
        bd::CaseData data = bd::build_case(cfg, spec);
        const Vector w = inner_product_weights(cfg.grid, cfg.inner_product);

        struct Row {
            std::string method;
            std::size_t n_modes;
            double train_err, test_err;
            bool ok;
        };
        std::vector<Row> rows;

        if (bd::selected("pod", method_filter)) {
            auto basis = fit_pod(data.train, cfg.inner_product);
            const std::size_t usable = std::min(basis.mode_count(), cfg.n_max);
            DenseMatrix z_train = bd::latent_matrix(basis, data.train, usable);
            KrrModel krr = krr_fit(data.train.times, z_train, krr_shape, cfg.krr_ridge);
            DenseMatrix z_test = krr_predict(krr, data.test.times);

            for (std::size_t n_modes = cfg.n_min; n_modes <= cfg.n_max; ++n_modes) {
                const std::size_t use = std::min(n_modes, usable);
                DenseMatrix train_rec(data.train.size(), cfg.grid.n_points);
                for (std::size_t i = 0; i < data.train.size(); ++i) {
                    Vector zi(z_train.row(i).begin(), z_train.row(i).begin() + use);
                    Vector rec = reconstruct(basis, zi);
                    for (std::size_t j = 0; j < rec.size(); ++j) train_rec(i, j) = rec[j];
                }
                DenseMatrix test_rec(data.test.size(), cfg.grid.n_points);
                for (std::size_t i = 0; i < data.test.size(); ++i) {
                    Vector zi(z_test.row(i).begin(), z_test.row(i).begin() + use);
                    Vector rec = reconstruct(basis, zi);
                    for (std::size_t j = 0; j < rec.size(); ++j) test_rec(i, j) = rec[j];
                }
                rows.push_back({"pod", n_modes, bd::mean_rel_l2(data.train.data, train_rec, w),
                                bd::mean_rel_l2(data.test.data, test_rec, w), true});
            }
        }

        if (bd::selected("registration", method_filter)) {
            try {
                auto art = bd::fit_registration_pipeline(cfg, data);

                // side artifacts: coefficients and per-snapshot diagnostics
                {
                    auto out = bd::open_out(bd::case_dir(cfg, spec.label) / "registration_coeffs.csv");
                    out << "t";
                    for (std::size_t m = 1; m <= cfg.registration.n_basis; ++m) out << ",a_" << m;
                    out << '\n';
                    for (std::size_t i = 0; i < data.train.size(); ++i) {
                        out << detail::fmt17(data.train.times[i]);
                        for (std::size_t m = 0; m < cfg.registration.n_basis; ++m)
                            out << ',' << detail::fmt17(art.coeff_matrix(i, m));
                        out << '\n';
                    }
                }
                {
                    const Vector u_ref(data.train.data.row(0).begin(), data.train.data.row(0).end());
                    auto out =
                        bd::open_out(bd::case_dir(cfg, spec.label) / "registration_diagnostics.csv");
                    out << "t,misfit,h2_term,barrier_integral,clamped_nodes\n";
                    for (std::size_t i = 0; i < data.train.size(); ++i) {
                        Vector u_i(data.train.data.row(i).begin(), data.train.data.row(i).end());
                        auto diag = registration_objective(art.maps[i].coeffs, u_i, u_ref,
                                                           cfg.registration, cfg.grid);
                        out << detail::fmt17(data.train.times[i]) << ',' << detail::fmt17(diag.misfit)
                            << ',' << detail::fmt17(diag.h2_term) << ','
                            << detail::fmt17(diag.barrier_integral) << ',' << diag.clamped_nodes
                            << '\n';
                    }
                }

                const std::size_t usable = art.train_latents.cols();
                KrrModel krr_z = krr_fit(data.train.times, art.train_latents, krr_shape, cfg.krr_ridge);
                KrrModel krr_a = krr_fit(data.train.times, art.coeff_matrix, krr_shape, cfg.krr_ridge);
                DenseMatrix z_test = krr_predict(krr_z, data.test.times);
                DenseMatrix a_test = krr_predict(krr_a, data.test.times);

                // map inversions are independent of N; cache per test point
                std::vector<Vector> inv_y(data.test.size());
                std::vector<RegistrationMap> test_maps(data.test.size());
                for (std::size_t i = 0; i < data.test.size(); ++i) {
                    Vector coeffs(a_test.row(i).begin(), a_test.row(i).end());
                    test_maps[i] = bd::map_from_coeffs(coeffs, data.test.times[i], cfg);
                    if (test_maps[i].min_slope_on_audit_grid(cfg.registration.audit_refine) <=
                        cfg.registration.min_slope)
                        throw NumericalError("registration: regressed test map failed the audit at t=" +
                                             std::to_string(data.test.times[i]));
                    inv_y[i] = invert_map_on_grid(test_maps[i], cfg.grid).y;
                }
                std::vector<Vector> inv_y_train(data.train.size());
                for (std::size_t i = 0; i < data.train.size(); ++i)
                    inv_y_train[i] = invert_map_on_grid(art.maps[i], cfg.grid).y;

                for (std::size_t n_modes = cfg.n_min; n_modes <= cfg.n_max; ++n_modes) {
                    const std::size_t use = std::min(n_modes, usable);
                    DenseMatrix train_rec(data.train.size(), cfg.grid.n_points);
                    for (std::size_t i = 0; i < data.train.size(); ++i) {
                        Vector zi(art.train_latents.row(i).begin(),
                                  art.train_latents.row(i).begin() + use);
                        Vector v = reconstruct(art.basis, zi);
                        CubicInterpolant itp(cfg.grid.points(), v);
                        for (std::size_t j = 0; j < cfg.grid.n_points; ++j)
                            train_rec(i, j) = itp.eval(inv_y_train[i][j]);
                    }
                    DenseMatrix test_rec(data.test.size(), cfg.grid.n_points);
                    for (std::size_t i = 0; i < data.test.size(); ++i) {
                        Vector zi(z_test.row(i).begin(), z_test.row(i).begin() + use);
                        Vector v = reconstruct(art.basis, zi);
                        CubicInterpolant itp(cfg.grid.points(), v);
                        for (std::size_t j = 0; j < cfg.grid.n_points; ++j)
                            test_rec(i, j) = itp.eval(inv_y[i][j]);
                    }
                    rows.push_back({"registration", n_modes,
                                    bd::mean_rel_l2(data.train.data, train_rec, w),
                                    bd::mean_rel_l2(data.test.data, test_rec, w), true});
                }
            } catch (const NumericalError&) {
                for (std::size_t n_modes = cfg.n_min; n_modes <= cfg.n_max; ++n_modes)
                    rows.push_back({"registration", n_modes, 0.0, 0.0, false});
            }
        }

        if (bd::selected("autoencoder", method_filter)) {
            for (std::size_t n_modes = cfg.n_min; n_modes <= cfg.n_max; ++n_modes) {
                try {
                    TrainConfig tc = cfg.ae_train;
                    tc.seed = bd::ae_seed(cfg, case_index, n_modes);
                    auto model =
                        AutoencoderModel::create(cfg.grid.n_points, n_modes, cfg.ae_loss, cfg.ae_lambda);
                    auto result = train(std::move(model), data.train, tc);

                    DenseMatrix train_rec(data.train.size(), cfg.grid.n_points);
                    for (std::size_t i = 0; i < data.train.size(); ++i) {
                        Vector rec = autoencode(result.model, data.train.data.row(i));
                        for (std::size_t j = 0; j < rec.size(); ++j) train_rec(i, j) = rec[j];
                    }
                    DenseMatrix test_rec(data.test.size(), cfg.grid.n_points);
                    for (std::size_t i = 0; i < data.test.size(); ++i) {
                        Vector rec = autoencode(result.model, data.test.data.row(i));
                        for (std::size_t j = 0; j < rec.size(); ++j) test_rec(i, j) = rec[j];
                    }
                    rows.push_back({"autoencoder", n_modes,
                                    bd::mean_rel_l2(data.train.data, train_rec, w),
                                    bd::mean_rel_l2(data.test.data, test_rec, w), true});
                } catch (const NumericalError&) {
                    rows.push_back({"autoencoder", n_modes, 0.0, 0.0, false});
                }
            }
        }

        auto out = bd::open_out(bd::case_dir(cfg, spec.label) / "errors.csv");
        out << "case,method,N,train_rel_l2,test_rel_l2,status\n";
        for (const auto& row : rows) {
            out << spec.label << ',' << row.method << ',' << row.n_modes << ',';
            if (row.ok)
                out << detail::fmt17(row.train_err) << ',' << detail::fmt17(row.test_err) << ",ok\n";
            else
                out << "nan,nan,failed\n";
        }

        if (cfg.svg) {
            std::vector<SvgSeries> series;
            for (const auto& method : bd::error_methods) {
                SvgSeries s;
                s.name = method + " (test)";
                for (const auto& row : rows)
                    if (row.method == method && row.ok) {
                        s.x.push_back(static_cast<double>(row.n_modes));
                        s.y.push_back(std::max(row.test_err, 1e-16));
                    }
                if (!s.x.empty()) series.push_back(std::move(s));
            }
            write_svg_lines((bd::case_dir(cfg, spec.label) / "errors.svg").string(),
                            spec.label + ": mean relative L2 test error vs N", series, true);
        }
    }
}

/// N=2 latent trajectories: kRR curves over the test times for POD and
/// registration, direct encoder outputs for the autoencoder, and training
/// embeddings (flagged train_only) for the kernel methods.
inline void run_latents(const BenchConfig& cfg, const std::string& case_filter = "",
                        const std::string& method_filter = "") {
    namespace bd = bench_detail;
    cfg.validate();
    bd::check_filters(cfg, case_filter, method_filter, bd::latent_methods);
    const double krr_shape = cfg.krr_shape_resolved();
    const std::size_t n_latent = 2;

    for (std::size_t case_index = 0; case_index < cfg.cases.size(); ++case_index) {
        const auto& spec = cfg.cases[case_index];
        if (!case_filter.empty() && spec.label != case_filter) continue;
        bd::CaseData data = bd::build_case(cfg, spec);

        struct Row {
            std::string method;
            double t, z1, z2;
            bool train_only;
        };
        std::vector<Row> rows;

        if (bd::selected("pod", method_filter)) {
            auto basis = fit_pod(data.train, cfg.inner_product);
            DenseMatrix z_train = bd::latent_matrix(basis, data.train,
                                                    std::min(n_latent, basis.mode_count()));
            KrrModel krr = krr_fit(data.train.times, z_train, krr_shape, cfg.krr_ridge);
            DenseMatrix z_test = krr_predict(krr, data.test.times);
            for (std::size_t i = 0; i < data.test.size(); ++i)
                rows.push_back({"pod", data.test.times[i], z_test(i, 0),
                                z_test.cols() > 1 ? z_test(i, 1) : 0.0, false});
        }

        if (bd::selected("registration", method_filter)) {
            auto art = bd::fit_registration_pipeline(cfg, data);
            const std::size_t use = std::min(n_latent, art.train_latents.cols());
            DenseMatrix z_train(data.train.size(), use);
            for (std::size_t i = 0; i < data.train.size(); ++i)
                for (std::size_t c = 0; c < use; ++c) z_train(i, c) = art.train_latents(i, c);
            KrrModel krr = krr_fit(data.train.times, z_train, krr_shape, cfg.krr_ridge);
            DenseMatrix z_test = krr_predict(krr, data.test.times);
            for (std::size_t i = 0; i < data.test.size(); ++i)
                rows.push_back({"registration", data.test.times[i], z_test(i, 0),
                                z_test.cols() > 1 ? z_test(i, 1) : 0.0, false});
        }

        if (bd::selected("autoencoder", method_filter)) {
            TrainConfig tc = cfg.ae_train;
            tc.seed = bd::ae_seed(cfg, case_index, n_latent);
            auto model =
                AutoencoderModel::create(cfg.grid.n_points, n_latent, cfg.ae_loss, cfg.ae_lambda);
            auto result = train(std::move(model), data.train, tc);
            for (std::size_t i = 0; i < data.test.size(); ++i) {
                Vector z = encode(result.model, data.test.data.row(i));
                rows.push_back({"autoencoder", data.test.times[i], z[0], z.size() > 1 ? z[1] : 0.0,
                                false});
            }
        }

        const std::pair<std::string, KernelKind> kernels[] = {
            {"kpca_linear", KernelKind::linear},
            {"kpca_mds", KernelKind::mds},
            {"kpca_isomap", KernelKind::isomap},
            {"kpca_spectral_clustering", KernelKind::spectral_clustering},
            {"kpca_lle", KernelKind::lle}};
        for (const auto& [name, kind] : kernels) {
            if (!bd::selected(name, method_filter)) continue;
            auto model = fit_kpca(data.train, kind, cfg.kpca);
            for (std::size_t i = 0; i < data.train.size(); ++i) {
                const double z1 = model.embedding.cols() > 0 ? model.embedding(i, 0) : 0.0;
                const double z2 = model.embedding.cols() > 1 ? model.embedding(i, 1) : 0.0;
                rows.push_back({name, data.train.times[i], z1, z2, true});
            }
        }

        auto out = bd::open_out(bd::case_dir(cfg, spec.label) / "latents.csv");
        out << "method,case,t,z_1,z_2,train_only\n";
        for (const auto& row : rows)
            out << row.method << ',' << spec.label << ',' << detail::fmt17(row.t) << ','
                << detail::fmt17(row.z1) << ',' << detail::fmt17(row.z2) << ','
                << (row.train_only ? 1 : 0) << '\n';
    }
}

/// Snapshot CSVs for every case (train.csv and test.csv).
inline void run_generate(const BenchConfig& cfg, const std::string& case_filter = "") {
    namespace bd = bench_detail;
    cfg.validate();
    bd::check_filters(cfg, case_filter, "", {});
    for (const auto& spec : cfg.cases) {
        if (!case_filter.empty() && spec.label != case_filter) continue;
        bd::CaseData data = bd::build_case(cfg, spec);
        save_csv(data.train, (bd::case_dir(cfg, spec.label) / "train.csv").string());
        save_csv(data.test, (bd::case_dir(cfg, spec.label) / "test.csv").string());
    }
}

inline void write_manifest(const BenchConfig& cfg) {
    namespace bd = bench_detail;
    std::filesystem::create_directories(cfg.output_dir);
    auto out = bd::open_out(std::filesystem::path(cfg.output_dir) / "manifest.txt");
    out << "morkit " << morkit_version() << "\n";
    out << "seed " << cfg.seed << "\n\n";
    out << serialize_bench_config(cfg);
}

/// The full protocol: snapshots, spectra, errors, latents, manifest.
inline void run_all(const BenchConfig& cfg, const std::string& case_filter = "") {
    run_generate(cfg, case_filter);
    run_spectra(cfg, case_filter);
    run_errors(cfg, case_filter);
    run_latents(cfg, case_filter);
    write_manifest(cfg);
}

}  // namespace mor
