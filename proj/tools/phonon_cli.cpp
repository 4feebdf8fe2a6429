// phonon: batch driver for Bloch bands, structural spectra, high-contrast
// limits, series radii and gap verdicts. Exit codes: 0 ok, 2 config or
// validation failure, 3 numerical failure.

#include "phonon/dispersion.hpp"
#include "phonon/io.hpp"
#include "phonon/limit.hpp"
#include "phonon/series.hpp"
#include "phonon/structural.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>

using namespace phonon;
namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    std::string cache;
    int workers = 1;
    int cutoff = -1;
    int branches = -1;
};

struct Run {
    Config cfg;
    CrystalSpec spec;
    Options opt;

    [[nodiscard]] Method method(Method fallback) const {
        const std::string m = cfg.str("discretization.method", fallback == Method::fe ? "fe" : "planewave");
        if (m == "planewave") return Method::planewave;
        if (m == "fe") return Method::fe;
        throw ValidationError("discretization.method must be planewave or fe");
    }
    [[nodiscard]] BandOptions bands(Method fallback) const {
        BandOptions b;
        b.method = method(fallback);
        b.cache_dir = opt.cache;
        b.cutoff_N = opt.cutoff >= 0 ? opt.cutoff : cfg.integer("discretization.cutoff", 3);
        b.fe.cells_across = opt.cutoff >= 0 ? opt.cutoff : cfg.integer("discretization.fe_cells", 12);
        b.fe.lumped_mass = cfg.flag("discretization.fe_lumped_mass", false);
        if (b.method == Method::fe && b.fe.cells_across < 4) throw ValidationError("FE grid needs at least 4 cells");
        return b;
    }
    [[nodiscard]] int branches(int fallback) const {
        const int j = opt.branches >= 0 ? opt.branches : cfg.integer("bands.count", fallback);
        if (j < 1) throw ValidationError("branch count must be positive");
        return j;
    }
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> provenance(const BandOptions& b) const {
        return {{"geometry_hash", geometry_hash(spec.geometry)},
                {"method", to_string(b.method)},
                {"cutoff", std::to_string(b.method == Method::planewave ? b.cutoff_N : b.fe.cells_across)}};
    }
    [[nodiscard]] std::string path(const std::string& name) const {
        fs::create_directories(opt.out);
        return (fs::path(opt.out) / name).string();
    }
    [[nodiscard]] std::vector<QuasiMomentum> alphas(const std::string& key, const std::vector<QuasiMomentum>& fallback) const {
        if (cfg.has(key)) {
            std::vector<QuasiMomentum> out;
            for (const Vec3& a : cfg.triples(key)) out.emplace_back(a);
            return out;
        }
        if (cfg.has("alpha.grid")) return symmetric_alpha_grid(cfg.integer("alpha.grid"));
        return fallback;
    }
};

bool empty_voxels(const CrystalSpec& s) { return !s.geometry.is_sphere() && s.geometry.voxels().count() == 0; }

Run load(const Options& opt, bool allow_empty = false) {
    Run r;
    r.opt = opt;
    r.cfg = Config::load(opt.config);
    r.spec = crystal_from_config(r.cfg);
    if (opt.workers < 1) throw ValidationError("--workers must be positive");
    auto v = validate(r.spec);
    if (allow_empty && empty_voxels(r.spec))
        std::erase_if(v, [](const Violation& x) { return x.invariant == "geometry.voxels"; });
    if (!v.empty()) {
        std::string msg = "invalid crystal specification:";
        for (const auto& x : v) msg += "\n  " + x.invariant + ": " + x.detail;
        throw ValidationError(msg);
    }
    return r;
}

void warn_unused(const Run& r) {
    for (const auto& k : r.cfg.unused()) std::cerr << "warning: config key " << k << " was not used\n";
}

// ---------------------------------------------------------------- bands
void cmd_bands(const Options& o) {
    Run r = load(o);
    const BandOptions b = r.bands(Method::planewave);
    std::vector<PathSample> samples;
    if (r.cfg.has("alpha.points")) {
        for (const Vec3& a : r.cfg.triples("alpha.points")) samples.push_back({QuasiMomentum(a), 0.0});
        for (std::size_t i = 1; i < samples.size(); ++i)
            samples[i].arclength =
                samples[i - 1].arclength + (samples[i].alpha.alpha() - samples[i - 1].alpha.alpha()).norm();
    } else {
        BZPath path = BZPath::cubic_default(r.cfg.integer("path.samples", 8));
        if (r.cfg.has("path.vertices")) {
            path.vertices.clear();
            for (const Vec3& a : r.cfg.triples("path.vertices")) path.vertices.emplace_back(a);
        }
        samples = sample_path(path);
    }
    const auto ks = r.cfg.list("bands.contrasts", {r.spec.material.contrast_k});
    for (double k : ks)
        if (!(k >= 1.0)) throw ValidationError("contrast values must be >= 1");
    const DispersionTable t = sweep(r.spec, samples, ks, r.branches(20), b, o.workers);
    warn_unused(r);

    CsvWriter csv(r.path("bands.csv"), r.provenance(b),
                  {"path_arclength", "alpha_x", "alpha_y", "alpha_z", "k", "j", "j_full", "xi", "omega", "residual"});
    std::map<std::pair<double, int>, std::vector<std::pair<double, double>>> curves;
    for (const auto& rec : t.records) {
        csv.row({rec.arclength, rec.alpha[0], rec.alpha[1], rec.alpha[2], rec.contrast_k, rec.j, rec.j_full, rec.xi,
                 std::sqrt(std::max(0.0, rec.xi)), rec.residual});
        curves[{rec.contrast_k, rec.j}].emplace_back(rec.arclength, rec.xi);
    }
    for (const auto& [key, pts] : curves) {
        std::ofstream dat(r.path("bands_k" + format_number(key.first) + "_j" + std::to_string(key.second) + ".dat"));
        dat << "# path_arclength xi\n";
        for (const auto& [s, xi] : pts) dat << format_number(s) << ' ' << format_number(xi) << '\n';
    }
    std::cout << "wrote " << t.records.size() << " band records to " << r.path("bands.csv") << '\n';
}

// ----------------------------------------------------------- structural
void cmd_structural(const Options& o) {
    Run r = load(o, true);
    const BandOptions b = r.bands(Method::planewave);
    const auto alphas = r.alphas("structural.alpha", symmetric_alpha_grid(3));
    std::vector<StructuralSpectrum> res(alphas.size());
    const bool empty = empty_voxels(r.spec);
    if (empty) std::cerr << "warning: the inclusion is empty; every mode is pinned at +1/2\n";
    parallel_for(alphas.size(), o.workers, [&](std::size_t i) {
        if (b.method == Method::fe) {
            res[i] = compute_structural_spectrum(assemble_fe(r.spec, b.fe, alphas[i]), r.spec.material);
            return;
        }
        IndicatorCoefficients chi;
        if (empty) {
            chi.cutoff_N = b.cutoff_N;
            chi.range = 2 * b.cutoff_N;
            chi.table.assign(static_cast<std::size_t>(chi.width()) * chi.width() * chi.width(), cplx(0.0));
        } else {
            chi = indicator_coefficients(r.spec.geometry, b.cutoff_N, b.cache_dir);
        }
        res[i] = compute_structural_spectrum(assemble(PlaneWaveBasis(b.cutoff_N, alphas[i]), chi, r.spec.material),
                                             r.spec.material);
    });
    warn_unused(r);

    auto prov = r.provenance(b);
    prov.emplace_back("eps_w", format_number(eps_w));
    CsvWriter csv(r.path("structural.csv"), prov,
                  {"alpha_x", "alpha_y", "alpha_z", "tau_index", "tau", "z_pole", "k_pole", "z_star"});
    CsvWriter sum(r.path("structural_summary.csv"), prov,
                  {"alpha_x", "alpha_y", "alpha_z", "n_tau", "w1_count", "w2_count", "near_endpoint", "tau_min",
                   "tau_max", "z_star"});
    const TauBound bound = tau_lower_bound(r.spec.geometry.theta);
    double tau_min = std::numeric_limits<double>::infinity();
    for (const auto& s : res) {
        const Vec3& a = s.alpha.alpha();
        for (std::size_t i = 0; i < s.taus.size(); ++i)
            csv.row({a[0], a[1], a[2], static_cast<int>(i) + 1, s.taus[i], s.z_poles[i], s.k_poles[i], s.z_star});
        const double lo = s.taus.empty() ? std::numeric_limits<double>::quiet_NaN() : s.taus.front();
        const double hi = s.taus.empty() ? std::numeric_limits<double>::quiet_NaN() : s.taus.back();
        sum.row({a[0], a[1], a[2], s.taus.size(), s.w1_count, s.w2_count, s.near_endpoint, lo, hi, s.z_star});
        if (!s.taus.empty()) tau_min = std::min(tau_min, lo);
        if (s.near_endpoint) std::cerr << "warning: " << s.near_endpoint << " tau values lie near +-1/2\n";
    }
    std::cout << "min tau = " << format_number(tau_min) << ", bound tau- = " << format_number(bound.tau_minus)
              << " (theta = " << format_number(r.spec.geometry.theta) << ")\n";
}

// ------------------------------------------------------------ dirichlet
struct LimitData {
    DirichletSpectrum d;
    std::optional<DirichletSpectrum> oracle;
    std::vector<double> rel;
};

LimitData dirichlet_data(const Run& r, const BandOptions& b) {
    if (b.method != Method::fe) throw ValidationError("the Dirichlet spectrum is computed on the fe discretization");
    LimitData L;
    L.d = dirichlet_spectrum(r.spec, r.cfg.integer("dirichlet.count", r.opt.branches > 0 ? r.opt.branches : 40), b.fe);
    const int fd = r.cfg.integer("dirichlet.fd_cells", 0);
    if (fd > 0) {
        L.oracle = dirichlet_spectrum_fd(r.spec, r.cfg.integer("dirichlet.fd_count", 6), fd);
        L.rel = compare_with_oracle(L.d, *L.oracle, r.cfg.num("dirichlet.tolerance", 0.05));
    }
    return L;
}

void cmd_dirichlet(const Options& o) {
    Run r = load(o);
    const BandOptions b = r.bands(Method::fe);
    const LimitData L = dirichlet_data(r, b);
    warn_unused(r);
    auto prov = r.provenance(b);
    prov.emplace_back("eps_mean", format_number(L.d.eps_mean));
    CsvWriter csv(r.path("dirichlet.csv"), prov,
                  {"j", "delta", "mean_abs", "zero_mean", "borderline", "oracle_delta", "oracle_rel_diff"});
    for (std::size_t j = 0; j < L.d.size(); ++j) {
        const auto& e = L.d.entries[j];
        const bool has = j < L.rel.size();
        csv.row({static_cast<int>(j) + 1, e.delta, e.mean_norm, e.zero_mean, e.borderline,
                 has ? L.oracle->entries[j].delta : std::numeric_limits<double>::quiet_NaN(),
                 has ? L.rel[j] : std::numeric_limits<double>::quiet_NaN()});
        if (e.borderline) std::cerr << "warning: mean of entry " << j + 1 << " is borderline\n";
    }
    std::cout << "wrote " << L.d.size() << " Dirichlet values to " << r.path("dirichlet.csv") << '\n';
}

// ---------------------------------------------------------- limit / gap
void write_limit(const Run& r, const BandOptions& b, const LimitSpectrum& ls, const MassRoots* roots,
                 const TailSensitivity* tail) {
    CsvWriter csv(r.path("limit.csv"), r.provenance(b), {"kind", "index", "lo", "hi", "holds"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (roots)
        for (std::size_t i = 0; i < roots->roots.size(); ++i)
            csv.row({"nu", static_cast<int>(i) + 1, roots->roots[i].nu, static_cast<double>(roots->roots[i].multiplicity),
                     true});
    for (std::size_t i = 0; i < ls.omega.size(); ++i) csv.row({"omega", static_cast<int>(i) + 1, ls.omega[i], nan, true});
    for (std::size_t i = 0; i < ls.limit_bands.size(); ++i)
        csv.row({"band", static_cast<int>(i) + 1, ls.limit_bands[i].lo, ls.limit_bands[i].hi, true});
    for (std::size_t i = 0; i < ls.gaps.size(); ++i)
        csv.row({"gap", static_cast<int>(i) + 1, ls.gaps[i].lo, ls.gaps[i].hi, true});
    for (const auto& v : ls.verdicts) csv.row({"criterion", v.j, v.delta_j2, v.omega_j, v.holds});
    for (std::size_t i = 0; i < ls.interlacing_failures.size(); ++i)
        csv.row({"interlacing_failure", static_cast<int>(i) + 1, nan, nan, false});
    if (tail) csv.row({"tail_max_shift", static_cast<int>(tail->modes_reduced), tail->max_shift, nan, true});
}

void print_verdicts(const LimitSpectrum& ls) {
    for (const auto& v : ls.verdicts)
        std::cout << "gap (" << format_number(v.delta_j2) << "," << format_number(v.omega_j) << "): criterion delta_{"
                  << v.j + 2 << "} < omega_" << v.j << (v.holds ? " holds" : " fails") << '\n';
}

void cmd_limit(const Options& o, bool gap_only) {
    Run r = load(o);
    const BandOptions b = r.bands(Method::fe);
    if (gap_only && r.cfg.has("gap.delta")) {
        const auto delta = r.cfg.list("gap.delta");
        const auto omega = r.cfg.list("gap.omega");
        warn_unused(r);
        // Supplied omega values are taken as the merged limit list.
        const LimitSpectrum ls = limit_band_structure(delta, omega, {}, std::numeric_limits<double>::infinity());
        write_limit(r, b, ls, nullptr, nullptr);
        print_verdicts(ls);
        return;
    }
    const LimitData L = dirichlet_data(r, b);
    const MassRoots roots = mass_roots(L.d);
    for (const auto& w : roots.warnings) std::cerr << "warning: " << w << '\n';
    const LimitSpectrum ls = limit_band_structure(L.d, roots);
    const TailSensitivity tail = tail_sensitivity(L.d);
    warn_unused(r);
    write_limit(r, b, ls, &roots, &tail);
    for (const auto& f : ls.interlacing_failures) std::cerr << "interlacing: " << f << '\n';
    if (gap_only) print_verdicts(ls);
    else
        std::cout << "omega_1 = " << (ls.omega.empty() ? std::string("none") : format_number(ls.omega.front()))
                  << ", " << ls.gaps.size() << " gaps, tail shift " << format_number(tail.max_shift) << '\n';
}

// --------------------------------------------------------------- radius
void cmd_radius(const Options& o) {
    Run r = load(o);
    const BandOptions b = r.bands(Method::fe);
    const QuasiMomentum alpha(r.cfg.has("radius.alpha") ? r.cfg.triple("radius.alpha") : Vec3(pi, 0, 0));
    const std::string source = r.cfg.str("radius.tau_source", "theta");
    double tau_minus;
    if (source == "theta") {
        tau_minus = tau_lower_bound(r.spec.geometry.theta).tau_minus;
    } else if (source == "computed") {
        const auto s = b.method == Method::fe
                           ? compute_structural_spectrum(assemble_fe(r.spec, b.fe, alpha), r.spec.material)
                           : compute_structural_spectrum(assemble(r.spec, b.cutoff_N, alpha, b.cache_dir), r.spec.material);
        if (s.taus.empty()) throw NumericError("no structural eigenvalues at this alpha");
        tau_minus = s.taus.front();
    } else {
        throw ValidationError("radius.tau_source must be theta or computed");
    }
    double d;
    const int j = r.cfg.integer("radius.branch", 1);
    if (r.cfg.has("radius.d")) {
        d = r.cfg.num("radius.d");
    } else {
        const DirichletSpectrum ds = dirichlet_spectrum(r.spec, std::max(12, j + 6), b.fe);
        std::vector<double> betas;
        for (const auto& e : ds.entries) betas.push_back(1.0 / e.delta);
        d = cluster_isolation_distance(betas, j);
    }
    const RadiusEstimate est = alpha.is_gamma()
                                   ? radius_periodic(d, tau_minus, r.spec.material.mu1, r.spec.material.rho_sup())
                                   : radius_quasi(alpha.norm2(), d, tau_minus, r.spec.material.mu1,
                                                  r.spec.material.rho_sup());
    warn_unused(r);
    CsvWriter csv(r.path("radius.csv"), r.provenance(b),
                  {"alpha_x", "alpha_y", "alpha_z", "j", "d", "tau_minus", "tau_source", "z_star", "r_star",
                   "k_threshold"});
    csv.row({alpha[0], alpha[1], alpha[2], j, est.d, est.tau_minus, source, est.z_star, est.r_star, est.k_threshold});
    std::cout << "|z*| = " << format_number(std::abs(est.z_star)) << ", r* = " << format_number(est.r_star)
              << ", contrast threshold = " << format_number(est.k_threshold) << '\n';
}

// --------------------------------------------------------------- series
void cmd_series(const Options& o) {
    Run r = load(o);
    const BandOptions b = r.bands(Method::fe);
    if (b.method != Method::fe) throw ValidationError("the series coefficient is computed on the fe discretization");
    const QuasiMomentum alpha(r.cfg.has("series.alpha") ? r.cfg.triple("series.alpha") : Vec3(pi, 0, 0));
    const int j = r.cfg.integer("series.branch", 1);
    const auto ks = r.cfg.list("series.k_list", {2000, 4000, 8000});
    const DirichletSpectrum d = dirichlet_spectrum(r.spec, std::max(12, j + 6), b.fe);
    const HexFEPencil p = assemble_fe(r.spec, b.fe, alpha);
    const SeriesComparison c = series_vs_direct(p, r.spec.material, d, j, ks,
                                                tau_lower_bound(r.spec.geometry.theta).tau_minus, "theta");
    warn_unused(r);
    CsvWriter csv(r.path("series.csv"), r.provenance(b),
                  {"alpha_x", "alpha_y", "alpha_z", "j", "delta_j", "xi_slope", "r_star", "k_threshold", "k",
                   "xi_direct", "xi_series", "beta_error", "bound", "in_disk"});
    for (const auto& row : c.rows) {
        csv.row({alpha[0], alpha[1], alpha[2], j, c.coeff.xi0, c.coeff.xi_slope, c.radius.r_star,
                 c.radius.k_threshold, row.k, row.xi_direct, row.xi_series, row.beta_error, row.bound, row.in_disk});
        if (!row.in_disk) std::cerr << "k = " << format_number(row.k) << " is out of the disk (below threshold)\n";
    }
    std::cout << "xi_slope = " << format_number(c.coeff.xi_slope) << ", r* = " << format_number(c.radius.r_star)
              << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bloch spectra of high-contrast phononic crystals"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "key = value configuration file")->required()->check(CLI::ExistingFile);
        s->add_option("--out", o.out, "output directory");
        s->add_option("--cache", o.cache, "indicator-coefficient cache directory");
        s->add_option("--workers", o.workers, "parallel workers");
        s->add_option("--cutoff", o.cutoff, "plane-wave cutoff N, or FE cells across the inclusion");
        s->add_option("--branches", o.branches, "number of branches");
    };
    std::map<std::string, std::function<void()>> cmds{
        {"bands", [&] { cmd_bands(o); }},
        {"structural", [&] { cmd_structural(o); }},
        {"dirichlet", [&] { cmd_dirichlet(o); }},
        {"limit", [&] { cmd_limit(o, false); }},
        {"radius", [&] { cmd_radius(o); }},
        {"series", [&] { cmd_series(o); }},
        {"gap", [&] { cmd_limit(o, true); }},
    };
    const std::map<std::string, std::string> help{
        {"bands", "dispersion along a Brillouin-zone path"},
        {"structural", "structural spectrum and pole sets"},
        {"dirichlet", "Dirichlet spectrum of the inclusion"},
        {"limit", "effective-mass roots and limit bands"},
        {"radius", "series radius of convergence"},
        {"series", "first-order coefficient against direct solves"},
        {"gap", "band-gap verdicts"},
    };
    for (const auto& [name, text] : help) add_common(app.add_subcommand(name, text));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        cmds.at(app.get_subcommands().front()->get_name())();
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
