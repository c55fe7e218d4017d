#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dip/benchmarks.hpp"
#include "dip/oracle.hpp"
#include "dip/verifier.hpp"

namespace {

constexpr int kExitDp = 0;
constexpr int kExitNotDp = 1;
constexpr int kExitUnknown = 2;
constexpr int kExitUsage = 64;
constexpr int kExitInput = 65;

dip::Rational parse_rat_or_die(const std::string& s, const std::string& what) {
    auto q = dip::parse_rational(s);
    if (!q) {
        std::cerr << "error: " << what << " must be an exact rational like 1/2 (got '" << s
                  << "'; floats are not accepted)\n";
        exit(kExitUsage);
    }
    return *q;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open " << path << "\n";
        exit(kExitInput);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

dip::Valuation parse_valuation(const std::string& s) {
    dip::Valuation v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: valuation entries look like name=value\n";
            exit(kExitUsage);
        }
        std::string name = item.substr(0, eq);
        v[name] = parse_rat_or_die(item.substr(eq + 1), "valuation value");
    }
    return v;
}

dip::ThresholdPolicy parse_threshold_mode(const std::string& s) {
    dip::ThresholdPolicy pol;
    if (s == "adaptive") {
        pol.mode = dip::ThresholdMode::Adaptive;
        return pol;
    }
    if (s.rfind("fixed:", 0) == 0) {
        std::string rest = s.substr(6);
        auto comma = rest.find(',');
        if (comma == std::string::npos) {
            std::cerr << "error: --threshold-mode fixed:<gauss>,<laplace>\n";
            exit(kExitUsage);
        }
        pol.mode = dip::ThresholdMode::Fixed;
        pol.fixed_gauss = parse_rat_or_die(rest.substr(0, comma), "gaussian threshold");
        pol.fixed_laplace = parse_rat_or_die(rest.substr(comma + 1), "laplace threshold");
        return pol;
    }
    std::cerr << "error: --threshold-mode is 'adaptive' or 'fixed:<g>,<l>'\n";
    exit(kExitUsage);
}

dip::AdjacencyRelation adjacency_for(const dip::Program& p, const std::string& kind,
                                     const std::string& file) {
    dip::AdjacencyRelation adj;
    if (kind == "all") {
        auto inputs = dip::enumerate_valuations(p.inputs);
        for (auto& a : inputs)
            for (auto& b : inputs)
                if (a != b) adj.pairs.push_back({a, b});
        return adj;
    }
    if (kind == "single") {
        if (p.inputs.empty()) {
            std::cerr << "error: program has no inputs\n";
            exit(kExitInput);
        }
        dip::Valuation base, tweaked;
        for (auto& d : p.inputs) base[d.name] = d.values.front();
        tweaked = base;
        const auto& last = p.inputs.back();
        if (last.values.size() < 2) {
            std::cerr << "error: single-pair adjacency needs >= 2 domain values\n";
            exit(kExitInput);
        }
        tweaked[last.name] = last.values[1];
        adj.pairs.push_back({base, tweaked});
        adj.pairs.push_back({tweaked, base});
        return adj;
    }
    if (kind == "file") {
        return dip::adjacency_from_json(read_file(file));
    }
    std::cerr << "error: --adjacency is all | single | file\n";
    exit(kExitUsage);
}

nlohmann::json valuation_json(const dip::Valuation& v) {
    nlohmann::json o = nlohmann::json::object();
    for (auto& [k, q] : v) o[k] = dip::rational_str(q);
    return o;
}

nlohmann::json plan_node_json(const dip::PlanNode& n) {
    nlohmann::json j;
    if (n.kind == dip::PlanNode::Kind::Product) {
        j["product"] = nlohmann::json::array();
        for (auto& f : n.factors) j["product"].push_back(plan_node_json(f));
        return j;
    }
    j["var"] = n.var;
    j["dist"] = n.dist.kind == dip::DistKind::Gaussian ? "gauss" : "lap";
    j["mean"] = dip::rational_str(n.dist.mean);
    j["scale_num"] = dip::rational_str(n.dist.scale_num);
    auto bound_json = [](const dip::AffineBound& b) {
        nlohmann::json bj;
        bj["box"] = b.box.to_double();
        bj["terms"] = nlohmann::json::array();
        for (auto& t : b.terms) bj["terms"].push_back(dip::affine_str(t));
        return bj;
    };
    j["lower"] = bound_json(n.lower);
    j["upper"] = bound_json(n.upper);
    if (!n.body.empty()) {
        j["body"] = nlohmann::json::array();
        for (auto& c : n.body) j["body"].push_back(plan_node_json(c));
    }
    return j;
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        exit(kExitInput);
    }
    out << text << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differential privacy verifier for loop-free Gaussian/Laplace programs"};
    app.require_subcommand(1);

    // shared options
    std::string program_path, eps_s = "1/2", eps_prv_s = "1/2", delta_s = "1/100";
    std::string adjacency = "all", adjacency_file, threshold_mode = "fixed:4,8";
    std::string out_path, input_s, output_s, family_s;
    unsigned precision = 16, max_precision = 32;
    unsigned working_bits = 64;
    long node_cap = 1000000;
    int jobs = 1;
    bool no_optimize = false, strict = false, dump_states = false, dump_integrals = false;
    long samples = 1000000;
    uint64_t seed = 1;
    int bench_n = 2, bench_k = 2, bench_m = 2, bench_c = 1;
    std::string bench_t = "0", bench_sens = "1";

    auto add_verify_opts = [&](CLI::App* cmd) {
        cmd->add_option("--program", program_path, "DiPGauss source file")->required();
        cmd->add_option("--eps", eps_s, "privacy parameter (rational)");
        cmd->add_option("--precision", precision, "initial precision in bits");
        cmd->add_option("--threshold-mode", threshold_mode, "fixed:<g>,<l> or adaptive");
        cmd->add_option("--working-bits", working_bits, "dyadic significand bits");
        cmd->add_option("--node-cap", node_cap, "quadrature budget per path");
        cmd->add_flag("--no-optimize", no_optimize, "disable integral factoring");
        cmd->add_option("--out", out_path, "write the JSON result here");
    };

    CLI::App* verify = app.add_subcommand("verify", "decide (eps_prv, delta)-DP");
    add_verify_opts(verify);
    verify->add_option("--eps-prv", eps_prv_s, "privacy budget (rational)");
    verify->add_option("--delta", delta_s, "error parameter (rational)");
    verify->add_option("--max-precision", max_precision, "refinement cap in bits");
    verify->add_option("--adjacency", adjacency, "all | single | file");
    verify->add_option("--adjacency-file", adjacency_file, "JSON pair list");
    verify->add_option("--jobs", jobs, "parallel probability computations");
    verify->add_flag("--strict", strict, "check strict DP (< instead of <=)");

    CLI::App* compute_cmd = app.add_subcommand("compute-prob", "enclose Pr[eps,u,o,P]");
    add_verify_opts(compute_cmd);
    compute_cmd->add_option("--input", input_s, "input valuation q1=0,q2=1")->required();
    compute_cmd->add_option("--output", output_s, "output valuation")->required();

    CLI::App* emit_cmd = app.add_subcommand("emit-benchmark", "write a benchmark program");
    emit_cmd->add_option("--family", family_s, "benchmark family name")->required();
    emit_cmd->add_option("--n", bench_n, "input length");
    emit_cmd->add_option("--k", bench_k, "k-Min-Max prefix");
    emit_cmd->add_option("--m", bench_m, "m-Range dimensions");
    emit_cmd->add_option("--c", bench_c, "SVT top count");
    emit_cmd->add_option("--t", bench_t, "threshold value (rational)");
    emit_cmd->add_option("--sens", bench_sens, "sensitivity (rational)");
    emit_cmd->add_option("--out", out_path, "output .dpg path");

    CLI::App* budget_cmd = app.add_subcommand("budget", "SVT-Gauss budget lower bound");
    budget_cmd->add_option("--eps", eps_s, "privacy parameter");
    budget_cmd->add_option("--delta", delta_s, "error parameter");

    CLI::App* mc_cmd = app.add_subcommand("mc-check", "Monte-Carlo cross-check");
    add_verify_opts(mc_cmd);
    mc_cmd->add_option("--input", input_s, "input valuation")->required();
    mc_cmd->add_option("--output", output_s, "output valuation")->required();
    mc_cmd->add_option("--samples", samples, "sample count");
    mc_cmd->add_option("--seed", seed, "RNG seed");

    CLI::App* dump_cmd = app.add_subcommand("dump", "dump states or integral plans");
    add_verify_opts(dump_cmd);
    dump_cmd->add_option("--input", input_s, "input valuation")->required();
    dump_cmd->add_flag("--dump-states", dump_states, "emit final states");
    dump_cmd->add_flag("--dump-integrals", dump_integrals, "emit integral plans");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (emit_cmd->parsed()) {
            auto fam = dip::family_from_name(family_s);
            if (!fam) {
                std::cerr << "error: unknown family '" << family_s << "'\n";
                return kExitUsage;
            }
            dip::BenchmarkSpec spec;
            spec.family = *fam;
            spec.n = bench_n;
            spec.k = bench_k;
            spec.m = bench_m;
            spec.c = bench_c;
            spec.threshold = parse_rat_or_die(bench_t, "--t");
            spec.sens = parse_rat_or_die(bench_sens, "--sens");
            write_out(out_path, dip::emit(spec));
            return 0;
        }
        if (budget_cmd->parsed()) {
            dip::Rational eps = parse_rat_or_die(eps_s, "--eps");
            dip::Rational delta = parse_rat_or_die(delta_s, "--delta");
            dip::Rational b = dip::svt_gauss_budget(eps, delta);
            std::cout << dip::rational_str(b) << "  (~" << dip::to_double(b) << ")\n";
            return 0;
        }

        dip::VerificationParams vp;
        vp.eps = parse_rat_or_die(eps_s, "--eps");
        vp.rho = precision;
        vp.max_rho = std::max(max_precision, precision);
        vp.thresholds = parse_threshold_mode(threshold_mode);
        vp.optimize = !no_optimize;
        vp.sig = working_bits;
        vp.node_budget = node_cap;
        vp.jobs = jobs;

        dip::Program prog = dip::parse(read_file(program_path));
        dip::validate(prog);

        if (verify->parsed()) {
            vp.eps_prv = parse_rat_or_die(eps_prv_s, "--eps-prv");
            vp.delta = parse_rat_or_die(delta_s, "--delta");
            vp.strict = strict;
            dip::AdjacencyRelation adj = adjacency_for(prog, adjacency, adjacency_file);
            dip::Report rep = dip::verify_with_refinement(prog, adj, vp);
            write_out(out_path, rep.to_json());
            switch (rep.verdict) {
                case dip::Verdict::DP: return kExitDp;
                case dip::Verdict::NotDP: return kExitNotDp;
                case dip::Verdict::Unknown: return kExitUnknown;
            }
            return kExitUnknown;
        }
        if (compute_cmd->parsed()) {
            dip::Valuation u = parse_valuation(input_s), o = parse_valuation(output_s);
            dip::ComputeEntry e = dip::compute(prog, u, o, vp.rho, vp);
            nlohmann::json j;
            j["lo"] = e.enclosure.lo.to_double();
            j["hi"] = e.enclosure.hi.to_double();
            j["lo_exact"] = dip::rational_str(e.enclosure.lo.to_rational());
            j["hi_exact"] = dip::rational_str(e.enclosure.hi.to_rational());
            j["width"] = e.enclosure.width().to_double();
            j["conforming"] = e.conforming;
            j["tail_slack"] = dip::to_double(e.tail_slack);
            write_out(out_path, j.dump(2));
            return 0;
        }
        if (mc_cmd->parsed()) {
            dip::Valuation u = parse_valuation(input_s), o = parse_valuation(output_s);
            dip::ComputeEntry e = dip::compute(prog, u, o, vp.rho, vp);
            dip::McEstimate mc = dip::mc_prob(prog, vp.eps, u, o, samples, seed);
            nlohmann::json j;
            j["enclosure"] = {{"lo", e.enclosure.lo.to_double()},
                              {"hi", e.enclosure.hi.to_double()}};
            j["mc"] = {{"mean", mc.mean},
                       {"se", mc.standard_error},
                       {"samples", mc.sample_count},
                       {"seed", mc.seed}};
            double lo4 = mc.mean - 4 * mc.standard_error;
            double hi4 = mc.mean + 4 * mc.standard_error;
            j["consistent"] =
                e.enclosure.hi.to_double() >= lo4 && e.enclosure.lo.to_double() <= hi4;
            write_out(out_path, j.dump(2));
            return 0;
        }
        if (dump_cmd->parsed()) {
            dip::Valuation u = parse_valuation(input_s);
            nlohmann::json j;
            if (dump_states) {
                nlohmann::json arr = nlohmann::json::array();
                for (auto& fs : dip::exec_program(prog, u)) {
                    nlohmann::json st;
                    st["alpha"] = valuation_json(fs.st.alpha);
                    nlohmann::json beta = nlohmann::json::object();
                    for (auto& [v, bv] : fs.st.beta) {
                        if (std::holds_alternative<dip::DistSpec>(bv)) {
                            auto& d = std::get<dip::DistSpec>(bv);
                            beta[v] = std::string(d.kind == dip::DistKind::Gaussian
                                                      ? "gauss("
                                                      : "lap(") +
                                      dip::rational_str(d.mean) + ", " +
                                      dip::rational_str(d.scale_num) + "/eps)";
                        } else {
                            beta[v] = dip::affine_str(std::get<dip::AffineExpr>(bv));
                        }
                    }
                    st["beta"] = beta;
                    nlohmann::json gc = nlohmann::json::array(), gr = nlohmann::json::array();
                    for (auto& g : fs.g_const) gc.push_back(dip::bexpr_str(g));
                    for (auto& g : fs.g_rand) gr.push_back(dip::bexpr_str(g));
                    st["g_const"] = gc;
                    st["g_rand"] = gr;
                    arr.push_back(st);
                }
                j["states"] = arr;
            }
            if (dump_integrals) {
                auto plans = dip::plans_for_input(prog, u, vp);
                nlohmann::json arr = nlohmann::json::array();
                for (auto& pl : plans) {
                    nlohmann::json pj;
                    pj["zero"] = pl.zero;
                    pj["tail_slack"] = dip::to_double(pl.tail_slack);
                    pj["depth"] = pl.root.depth();
                    pj["plan"] = plan_node_json(pl.root);
                    arr.push_back(pj);
                }
                auto st = dip::depth_stats(plans);
                j["plans"] = arr;
                j["max_depth"] = st.max_depth;
                j["avg_depth"] = st.avg_depth;
            }
            write_out(out_path, j.dump(2));
            return 0;
        }
    } catch (const dip::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const dip::ValidateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitUsage;
}
