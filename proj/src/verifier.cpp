#include "dip/verifier.hpp"

#include <chrono>
#include <future>
#include <sstream>

#include <json.hpp>

namespace dip {

std::string verdict_str(Verdict v, bool strict_mode) {
    switch (v) {
        case Verdict::DP: return strict_mode ? "Strict-DP" : "DP";
        case Verdict::NotDP: return "Not_DP";
        case Verdict::Unknown: return "Unknown";
    }
    return "Unknown";
}

const ComputeEntry* ProbabilityStore::find_plain(const std::string& key) const {
    auto it = plain_.find(key);
    return it == plain_.end() ? nullptr : &it->second;
}
const ComputeEntry* ProbabilityStore::find_scaled(const std::string& key) const {
    auto it = scaled_.find(key);
    return it == scaled_.end() ? nullptr : &it->second;
}
void ProbabilityStore::put_plain(const std::string& key, ComputeEntry e) {
    plain_.emplace(key, std::move(e));
}
void ProbabilityStore::put_scaled(const std::string& key, ComputeEntry e) {
    scaled_.emplace(key, std::move(e));
}
void ProbabilityStore::clear() {
    plain_.clear();
    scaled_.clear();
}
Rational ProbabilityStore::max_tail_slack() const {
    Rational m = 0;
    for (auto& [k, e] : plain_)
        if (e.tail_slack > m) m = e.tail_slack;
    return m;
}

namespace {

std::string entry_key(const Valuation& u, const Valuation& o) {
    return valuation_key(u) + "#" + valuation_key(o);
}

// number of bits in the integer part of ceil(e^{eps_prv})
long scale_extra_bits(const Rational& eps_prv, size_t sig) {
    Ival e = enclose_exp(eps_prv, sig);
    long mag = static_cast<long>(e.hi.sig_bits()) + e.hi.exp();
    return std::max<long>(mag, 0);
}

} // namespace

ComputeEntry compute(const Program& p, const Valuation& u, const Valuation& o,
                     unsigned rho, const VerificationParams& vp, long extra_bits) {
    ComputeEntry out;
    std::vector<FinalState> paths = run(u, o, p);
    std::vector<const FinalState*> live;
    for (auto& fs : paths)
        if (eval_const(fs)) live.push_back(&fs);
    if (live.empty()) {
        out.enclosure = Ival::zero();
        return out;
    }
    long n = static_cast<long>(live.size());
    // per-path quadrature width budget: 2^-(rho+extra) / (2*paths)
    Dyadic quad_target =
        Dyadic::div(Dyadic::pow2(-static_cast<long>(rho) - extra_bits),
                    Dyadic(2 * n), vp.sig, Round::Down);
    // per-path tail budget for adaptive thresholds: 2^-(rho+extra+1) / paths
    Rational tail_budget =
        Rational(Dyadic::pow2(-static_cast<long>(rho) - extra_bits - 1).to_rational()) /
        Rational(n);

    QuadPolicy pol;
    pol.sig = vp.sig;
    pol.node_budget = vp.node_budget;

    Ival total = Ival::zero();
    bool conforming = true;
    Rational slack_total = 0;
    for (const FinalState* fs : live) {
        GuardSystem gs = to_guard_system(*fs);
        ThresholdInfo th = choose_threshold(gs, vp.thresholds, tail_budget, vp.sig);
        IntegralPlan plan = build_plan(gs, vp.eps, th, vp.optimize, vp.sig);
        EvalResult r = eval_plan(plan, vp.eps, quad_target, pol);
        conforming = conforming && r.conforming;
        // one-sided widening: bpr <= Pr <= bpr + tail
        Dyadic slack_d = Dyadic::from_rational(plan.tail_slack, vp.sig, Round::Up);
        Ival widened(r.value.lo, (r.value.hi + slack_d).round(vp.sig, Round::Up));
        total = iadd(total, widened, vp.sig);
        slack_total += plan.tail_slack;
    }
    out.enclosure = imeet(total, Ival(Dyadic(0), Dyadic(1)));
    out.conforming = conforming;
    out.tail_slack = slack_total;
    return out;
}

ComputeEntry compute_scale(const ComputeEntry& plain, unsigned rho,
                           const VerificationParams& vp) {
    ComputeEntry out;
    Ival e = enclose_exp(vp.eps_prv, vp.sig + 16);
    out.enclosure = iclamp_nonneg(scale(plain.enclosure, e, vp.sig));
    out.conforming = plain.conforming;
    out.tail_slack = plain.tail_slack;
    return out;
}

PairCheck verify_pair(const Valuation& u, const Valuation& u2, const Rational& delta,
                      const std::vector<Valuation>& outputs, const ProbabilityStore& store,
                      bool strict) {
    PairCheck pc;
    pc.u = u;
    pc.u2 = u2;
    for (auto& o : outputs) {
        const ComputeEntry* iu = store.find_plain(entry_key(u, o));
        const ComputeEntry* iu2 = store.find_scaled(entry_key(u2, o));
        if (!iu || !iu2) throw std::logic_error("probability store entry missing");
        Rational l1 = iu->enclosure.lo.to_rational();
        Rational u1 = iu->enclosure.hi.to_rational();
        Rational l2 = iu2->enclosure.lo.to_rational();
        Rational u2v = iu2->enclosure.hi.to_rational();
        Rational up = u1 - l2;
        if (up > 0) pc.delta_max += up;
        Rational lo = l1 - u2v;
        if (lo > 0) {
            pc.delta_min += lo;
            pc.counterexample_outputs.push_back({o, lo});
        }
    }
    bool dp = strict ? pc.delta_max < delta : pc.delta_max <= delta;
    bool not_dp = strict ? pc.delta_min >= delta : pc.delta_min > delta;
    if (dp)
        pc.result = Verdict::DP;
    else if (not_dp)
        pc.result = Verdict::NotDP;
    else
        pc.result = Verdict::Unknown;
    if (pc.result != Verdict::NotDP) pc.counterexample_outputs.clear();
    return pc;
}

std::vector<IntegralPlan> plans_for_input(const Program& p, const Valuation& u,
                                          const VerificationParams& vp) {
    std::vector<IntegralPlan> plans;
    for (auto& fs : exec_program(p, u)) {
        GuardSystem gs = to_guard_system(fs);
        ThresholdInfo th = choose_threshold(
            gs, vp.thresholds, Rational(Dyadic::pow2(-static_cast<long>(vp.rho) - 1).to_rational()),
            vp.sig);
        plans.push_back(build_plan(gs, vp.eps, th, vp.optimize, vp.sig));
    }
    return plans;
}

Report verify_dp(const Program& p, const AdjacencyRelation& adj,
                 const VerificationParams& vp, unsigned rho, size_t sig) {
    auto t0 = std::chrono::steady_clock::now();
    Report rep;
    rep.precision_used = rho;
    rep.strict_mode = vp.strict;

    VerificationParams vpr = vp;
    vpr.rho = rho;
    vpr.sig = sig;

    std::vector<Valuation> outputs = enumerate_valuations(p.outputs);
    long extra = scale_extra_bits(vp.eps_prv, sig);

    ProbabilityStore store;
    bool all_dp = true;

    auto ensure_entries = [&](const Valuation& u, const Valuation& u2) {
        struct Job {
            Valuation input;
            Valuation output;
            bool scaled;
            std::string key;
        };
        std::vector<Job> jobs;
        for (auto& o : outputs) {
            std::string ku = entry_key(u, o);
            if (!store.find_plain(ku)) jobs.push_back({u, o, false, ku});
            std::string ku2 = entry_key(u2, o);
            if (!store.find_scaled(ku2)) jobs.push_back({u2, o, true, ku2});
        }
        auto run_job = [&](const Job& j) -> std::pair<ComputeEntry, ComputeEntry> {
            // scaled entries reuse the plain computation at tightened width
            const ComputeEntry* have = store.find_plain(j.key);
            ComputeEntry plain = have ? *have : compute(p, j.input, j.output, rho, vpr, extra);
            ComputeEntry scaled;
            if (j.scaled) scaled = compute_scale(plain, rho, vpr);
            return {plain, scaled};
        };
        if (vpr.jobs <= 1) {
            for (auto& j : jobs) {
                auto [plain, scaled] = run_job(j);
                if (!store.find_plain(entry_key(j.input, j.output)))
                    store.put_plain(entry_key(j.input, j.output), plain);
                if (j.scaled) store.put_scaled(j.key, scaled);
            }
        } else {
            std::vector<std::future<std::pair<ComputeEntry, ComputeEntry>>> futs;
            futs.reserve(jobs.size());
            for (auto& j : jobs)
                futs.push_back(std::async(std::launch::async, run_job, std::cref(j)));
            for (size_t i = 0; i < jobs.size(); ++i) {
                auto [plain, scaled] = futs[i].get();
                if (!store.find_plain(entry_key(jobs[i].input, jobs[i].output)))
                    store.put_plain(entry_key(jobs[i].input, jobs[i].output), plain);
                if (jobs[i].scaled) store.put_scaled(jobs[i].key, scaled);
            }
        }
    };

    for (auto& [u, u2] : adj.pairs) {
        if (vp.use_store) {
            ensure_entries(u, u2);
        } else {
            store.clear();
            ensure_entries(u, u2);
        }
        PairCheck pc = verify_pair(u, u2, vp.delta, outputs, store, vp.strict);
        rep.pairs.push_back(pc);
        if (pc.result == Verdict::NotDP) {
            rep.verdict = Verdict::NotDP;
            rep.counterexample = std::make_pair(u, u2);
            rep.tail_slack = store.max_tail_slack();
            if (!adj.pairs.empty())
                rep.depth = depth_stats(plans_for_input(p, adj.pairs.front().first, vpr));
            auto t1 = std::chrono::steady_clock::now();
            rep.timings_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
            return rep;
        }
        if (pc.result == Verdict::Unknown) all_dp = false;
    }
    rep.verdict = all_dp ? Verdict::DP : Verdict::Unknown;
    rep.tail_slack = store.max_tail_slack();
    if (!adj.pairs.empty())
        rep.depth = depth_stats(plans_for_input(p, adj.pairs.front().first, vpr));
    auto t1 = std::chrono::steady_clock::now();
    rep.timings_ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    return rep;
}

Report verify_with_refinement(const Program& p, const AdjacencyRelation& adj,
                              const VerificationParams& vp) {
    unsigned rho = vp.rho;
    size_t sig = vp.sig;
    long total_ms = 0;
    while (true) {
        Report rep = verify_dp(p, adj, vp, rho, sig);
        total_ms += rep.timings_ms;
        rep.timings_ms = total_ms;
        if (rep.verdict != Verdict::Unknown) return rep;
        if (rho >= vp.max_rho) {
            rep.at_max_precision = true;
            return rep;
        }
        rho = std::min(rho * 2, vp.max_rho);
        sig *= 2;
    }
}

bool check_rephrasing(const Program& p, const AdjacencyRelation& adj,
                      const VerificationParams& vp) {
    std::vector<Valuation> outputs = enumerate_valuations(p.outputs);
    long extra = scale_extra_bits(vp.eps_prv, vp.sig);

    for (auto& [u, u2] : adj.pairs) {
        // gather enclosures
        std::vector<Ival> plain, scaled;
        std::vector<Valuation> relevant;
        ProbabilityStore store;
        for (auto& o : outputs) {
            ComputeEntry pe = compute(p, u, o, vp.rho, vp, extra);
            ComputeEntry pe2 = compute(p, u2, o, vp.rho, vp, extra);
            ComputeEntry se = compute_scale(pe2, vp.rho, vp);
            store.put_plain(entry_key(u, o), pe);
            store.put_scaled(entry_key(u2, o), se);
            if (pe.enclosure.hi.sign() > 0 || se.enclosure.hi.sign() > 0) {
                relevant.push_back(o);
                plain.push_back(pe.enclosure);
                scaled.push_back(se.enclosure);
            }
        }
        // brute force over all subsets of the relevant outputs
        size_t m = relevant.size();
        if (m > 20) throw std::runtime_error("check_rephrasing: output set too large");
        bool all_true = true, any_false = false;
        for (size_t mask = 0; mask < (size_t{1} << m); ++mask) {
            Rational lhs_hi = 0, lhs_lo = 0, rhs_hi = 0, rhs_lo = 0;
            for (size_t i = 0; i < m; ++i) {
                if (!(mask & (size_t{1} << i))) continue;
                lhs_hi += plain[i].hi.to_rational();
                lhs_lo += plain[i].lo.to_rational();
                rhs_hi += scaled[i].hi.to_rational();
                rhs_lo += scaled[i].lo.to_rational();
            }
            bool cert_true = vp.strict ? lhs_hi < rhs_lo + vp.delta
                                       : lhs_hi <= rhs_lo + vp.delta;
            bool cert_false = vp.strict ? lhs_lo >= rhs_hi + vp.delta
                                        : lhs_lo > rhs_hi + vp.delta;
            if (cert_false) any_false = true;
            if (!cert_true) all_true = false;
        }
        Verdict brute = any_false ? Verdict::NotDP
                                  : (all_true ? Verdict::DP : Verdict::Unknown);
        PairCheck pc = verify_pair(u, u2, vp.delta, outputs, store, vp.strict);
        if (brute != Verdict::Unknown && pc.result != Verdict::Unknown &&
            brute != pc.result)
            return false;
    }
    return true;
}

std::string Report::to_json() const {
    nlohmann::json j;
    j["verdict"] = verdict_str(verdict, strict_mode);
    j["precision_used"] = precision_used;
    auto val_json = [](const Valuation& v) {
        nlohmann::json o = nlohmann::json::object();
        for (auto& [k, q] : v) o[k] = rational_str(q);
        return o;
    };
    nlohmann::json pj = nlohmann::json::array();
    for (auto& pc : pairs) {
        nlohmann::json e;
        e["u"] = val_json(pc.u);
        e["u2"] = val_json(pc.u2);
        e["delta_min"] = rational_str(pc.delta_min);
        e["delta_max"] = rational_str(pc.delta_max);
        e["result"] = verdict_str(pc.result, strict_mode);
        if (!pc.counterexample_outputs.empty()) {
            nlohmann::json ce = nlohmann::json::array();
            for (auto& [o, contrib] : pc.counterexample_outputs) {
                nlohmann::json c;
                c["output"] = val_json(o);
                c["contribution"] = rational_str(contrib);
                ce.push_back(c);
            }
            e["counterexample_outputs"] = ce;
        }
        pj.push_back(e);
    }
    j["pairs"] = pj;
    j["tail_slack"] = rational_str(tail_slack);
    j["depth"] = {{"max", depth.max_depth}, {"avg", depth.avg_depth}};
    j["timings_ms"] = timings_ms;
    if (at_max_precision)
        j["note"] = "Unknown at maximum precision; delta may be near a critical value";
    return j.dump(2);
}

} // namespace dip
