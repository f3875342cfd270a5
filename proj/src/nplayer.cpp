#include "mfgpi/nplayer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "mfgpi/errors.hpp"

namespace mfgpi {

namespace {

struct Noise {
    double ds = 0.0;
    std::vector<double> times, W, Y, dW, dY;
};

void check_request(const EnsembleRequest& r, double T) {
    if (r.N < 2) throw InputError("nplayer: N must be >= 2");
    if (r.n_steps < 1) throw InputError("nplayer: n_steps must be >= 1");
    if (!(r.t0 >= 0.0 && r.t0 < T)) throw InputError("nplayer: t0 must lie in [0, T)");
    if (r.atoms.empty()) throw InputError("nplayer: at least one initial-wealth atom is required");
    for (const auto& [x, w] : r.atoms)
        if (!std::isfinite(x) || !(w > 0.0)) throw InputError("nplayer: atoms need finite wealth and positive weight");
}

double atoms_mean(const std::vector<std::pair<double, double>>& atoms) {
    double sw = 0.0, sx = 0.0;
    for (const auto& [x, w] : atoms) {
        sw += w;
        sx += w * x;
    }
    return sx / sw;
}

std::vector<double> draw_initial(const EnsembleRequest& r) {
    std::vector<double> x0(r.N, r.atoms.front().first);
    if (r.atoms.size() == 1) return x0;
    std::vector<double> cdf;
    double acc = 0.0;
    for (const auto& a : r.atoms) cdf.push_back(acc += a.second);
    PathRng rng(r.seed, Stream::InitialWealth, r.replication);
    for (auto& x : x0) {
        const double u = rng.uniform() * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        x = r.atoms[std::min<std::size_t>(it - cdf.begin(), r.atoms.size() - 1)].first;
    }
    return x0;
}

// Factor path with the Euler step of simulate_paths; the same seed and index give the same draws.
Noise draw_noise(const MarketModel& m, const EnsembleRequest& r, double y_lo, double y_hi) {
    const double T = m.grid().T;
    const double ds = (T - r.t0) / static_cast<double>(r.n_steps);
    const double sq = std::sqrt(ds);
    Noise n;
    n.ds = ds;
    n.times.resize(r.n_steps + 1);
    n.W.resize(r.n_steps + 1);
    n.Y.resize(r.n_steps + 1);
    n.dW.resize(r.n_steps);
    n.dY.resize(r.n_steps);
    PathRng rng(r.seed, Stream::CommonNoise, r.replication);
    n.times[0] = r.t0;
    n.W[0] = 0.0;
    n.Y[0] = r.y0;
    for (std::size_t j = 0; j < r.n_steps; ++j) {
        const double dW = sq * rng.normal();
        const double bb = m.b(n.Y[j], n.times[j]);
        n.times[j + 1] = (j + 1 == r.n_steps) ? T : r.t0 + ds * static_cast<double>(j + 1);
        n.dW[j] = dW;
        n.dY[j] = bb * ds + dW;
        n.W[j + 1] = n.W[j] + dW;
        n.Y[j + 1] = n.Y[j] + bb * ds + dW;
        if (n.Y[j + 1] < y_lo || n.Y[j + 1] > y_hi) throw RangeError("nplayer: factor left the grid");
    }
    return n;
}

PlayerEnsemble start(const EnsembleRequest& r, Noise& n) {
    PlayerEnsemble e;
    e.N = r.N;
    e.times = n.times;
    e.W = n.W;
    e.Y = n.Y;
    e.x0 = draw_initial(r);
    e.mbar0 = atoms_mean(r.atoms);
    return e;
}

void leave_one_out(PlayerEnsemble& e) {
    const double S = pairwise_sum(e.XT.data(), e.N);
    e.loo_mean_T.resize(e.N);
    for (std::size_t i = 0; i < e.N; ++i) e.loo_mean_T[i] = (S - e.XT[i]) / static_cast<double>(e.N - 1);
}

// Runs body(r) for r in [0, n) over `threads` workers. The first exception is rethrown.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F body) {
    const unsigned k = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (k == 1) {
        for (std::size_t r = 0; r < n; ++r) body(r);
        return;
    }
    std::vector<std::exception_ptr> errors(k);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < k; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t r = w; r < n; r += k) body(r);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& ep : errors)
        if (ep) std::rethrow_exception(ep);
}

}  // namespace

PlayerEnsemble simulate_ensemble(const MfgSolution& sol, const EnsembleRequest& r) {
    check_request(r, sol.grid.T);
    Noise n = draw_noise(*sol.market, r, sol.grid.y_lo, sol.grid.y_hi);
    PlayerEnsemble e = start(r, n);
    const double n_others = static_cast<double>(r.N - 1);
    std::vector<double> X = e.x0;
    std::vector<double> pi(r.N);
    double ref = e.mbar0;
    for (std::size_t j = 0; j < r.n_steps; ++j) {
        const double Y = e.Y[j], s = e.times[j];
        const double dY = n.dY[j];
        const double S = pairwise_sum(X.data(), r.N);
        for (std::size_t i = 0; i < r.N; ++i) {
            pi[i] = r.scale * sol.pi_star(Y, (S - X[i]) / n_others, s);
            if (i == 0) pi[i] += r.deviation;
        }
        for (std::size_t i = 0; i < r.N; ++i) X[i] += pi[i] * dY;
        ref += sol.pi_star(Y, ref, s) * dY;
    }
    e.XT = std::move(X);
    e.reference_mean_T = ref;
    leave_one_out(e);
    return e;
}

PlayerEnsemble simulate_ensemble(const HSurface& single, const EnsembleRequest& r) {
    const MarketModel& m = *single.market;
    check_request(r, m.grid().T);
    if (r.scale != 1.0 || r.deviation != 0.0)
        throw InputError("nplayer: the single-agent strategy takes no scale or deviation");
    const auto& g = m.grid();
    Noise n = draw_noise(m, r, g.y_lo, g.y_hi);
    PlayerEnsemble e = start(r, n);
    // L with trapezoidal drift and left-point noise, as in simulate_paths.
    double L = 0.0;
    for (std::size_t j = 0; j < r.n_steps; ++j) {
        const double s = e.times[j], s1 = e.times[j + 1];
        const double c = m.c.eval(e.Y[j], s), c1 = m.c.eval(e.Y[j + 1], s1);
        L += 0.5 * (c * m.b(e.Y[j], s) + c1 * m.b(e.Y[j + 1], s1)) * n.ds + c * n.dW[j];
    }
    const double T = e.times.back(), YT = e.Y.back();
    e.XT.resize(r.N);
    for (std::size_t i = 0; i < r.N; ++i) e.XT[i] = single.H(single.H_inverse(e.x0[i], r.y0, r.t0) + L, YT, T);
    e.reference_mean_T = NAN;
    leave_one_out(e);
    return e;
}

double player_payoff(const MfgSolution& sol, const PlayerEnsemble& e, std::size_t i) {
    return -std::exp(-(e.XT[i] - sol.coupling.C(e.loo_mean_T[i])));
}

ConvergenceReport convergence_study(const MfgSolution& sol, const ConvergenceRequest& req) {
    const auto& Ns = req.N_list;
    if (Ns.size() < 3) throw InputError("convergence_study: N_list needs at least 3 values");
    for (std::size_t k = 0; k < Ns.size(); ++k) {
        if (Ns[k] < 2) throw InputError("convergence_study: every N must be >= 2");
        if (k > 0 && Ns[k] <= Ns[k - 1]) throw InputError("convergence_study: N_list must be strictly increasing");
    }
    if (static_cast<double>(Ns.back()) < 100.0 * static_cast<double>(Ns.front()))
        throw InputError("convergence_study: N_list must span at least 2 decades");
    if (req.replications < 2) throw InputError("convergence_study: replications must be >= 2");
    ConvergenceReport rep;
    for (std::size_t N : Ns) {
        std::vector<double> gaps(req.replications, NAN);
        parallel_for(req.replications, req.threads, [&](std::size_t r) {
            EnsembleRequest er;
            er.N = N;
            er.atoms = req.atoms;
            er.y0 = req.y0;
            er.t0 = req.t0;
            er.n_steps = req.n_steps;
            er.seed = req.seed;
            er.replication = r;
            try {
                const auto e = simulate_ensemble(sol, er);
                gaps[r] = std::abs(e.loo_mean_T[0] - e.reference_mean_T);
            } catch (const RangeError&) {
            }
        });
        ConvergenceRow row;
        row.N = N;
        std::vector<double> ok;
        for (double v : gaps)
            if (std::isnan(v))
                ++row.excluded;
            else
                ok.push_back(v);
        row.gap = estimate_mean(ok);
        rep.rows.push_back(row);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rep.rows.size());
    for (const auto& row : rep.rows) {
        const double x = std::log(static_cast<double>(row.N)), y = std::log(row.gap.mean);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

DeviationReport nash_gap(const MfgSolution& sol, const NashRequest& req) {
    if (req.n_paths < 2) throw InputError("nash_gap: n_paths must be >= 2");
    if (std::find(req.deltas.begin(), req.deltas.end(), 0.0) == req.deltas.end())
        throw InputError("nash_gap: the perturbation family must contain 0");
    const std::size_t D = req.deltas.size();
    std::vector<double> base(req.n_paths, NAN);
    std::vector<double> dev(req.n_paths * D, NAN);
    parallel_for(req.n_paths, req.threads, [&](std::size_t p) {
        EnsembleRequest er;
        er.N = req.N;
        er.atoms = req.atoms;
        er.y0 = req.y0;
        er.t0 = req.t0;
        er.n_steps = req.n_steps;
        er.seed = req.seed;
        er.replication = p;
        er.scale = req.scale;
        try {
            const double b = player_payoff(sol, simulate_ensemble(sol, er), 0);
            std::vector<double> d(D);
            for (std::size_t k = 0; k < D; ++k) {
                if (req.deltas[k] == 0.0) {
                    d[k] = b;
                    continue;
                }
                er.deviation = req.deltas[k];
                d[k] = player_payoff(sol, simulate_ensemble(sol, er), 0);
            }
            base[p] = b;
            std::copy(d.begin(), d.end(), dev.begin() + static_cast<std::ptrdiff_t>(p * D));
        } catch (const RangeError&) {
        }
    });
    DeviationReport rep;
    std::vector<double> b_ok;
    for (double v : base)
        if (!std::isnan(v)) b_ok.push_back(v);
    rep.baseline = estimate_mean(b_ok);
    rep.max_gain = -INFINITY;
    for (std::size_t k = 0; k < D; ++k) {
        std::vector<double> gain;
        for (std::size_t p = 0; p < req.n_paths; ++p)
            if (!std::isnan(base[p])) gain.push_back(dev[p * D + k] - base[p]);
        DeviationRow row{req.deltas[k], estimate_mean(gain)};
        if (row.gain.mean > rep.max_gain) {
            rep.max_gain = row.gain.mean;
            rep.max_gain_std_error = row.gain.std_error;
            rep.argmax_delta = row.delta;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

std::vector<std::pair<double, double>> uniform_atoms(double lo, double hi, std::size_t n) {
    if (n < 1 || !(lo <= hi)) throw InputError("uniform_atoms: need n >= 1 and lo <= hi");
    std::vector<std::pair<double, double>> a;
    for (std::size_t i = 0; i < n; ++i)
        a.push_back({n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1),
                     1.0 / static_cast<double>(n)});
    return a;
}

}  // namespace mfgpi
