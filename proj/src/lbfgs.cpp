#include "dgreg/errors.hpp"
#include "dgreg/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace dgreg {

void LbfgsOptions::validate() const {
    if (max_iterations < 1) {
        throw InvalidArgument("L-BFGS: max_iterations must be >= 1");
    }
    if (memory < 1) {
        throw InvalidArgument("L-BFGS: memory must be >= 1");
    }
    if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) {
        throw InvalidArgument("L-BFGS: need 0 < c1 < c2 < 1");
    }
    if (!(gtol_relative >= 0.0) || !(gtol_absolute >= 0.0) || max_line_search < 1) {
        throw InvalidArgument("L-BFGS: invalid tolerances");
    }
}

const char* to_string(LbfgsStatus status) {
    switch (status) {
    case LbfgsStatus::converged:
        return "converged";
    case LbfgsStatus::max_iterations:
        return "max_iterations";
    case LbfgsStatus::line_search_failed:
        return "line_search_failed";
    }
    return "unknown";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

struct Point {
    double alpha = 0.0;
    double value = 0.0;
    double slope = 0.0;
    std::vector<double> x;
    std::vector<double> grad;
};

class LineSearch {
public:
    LineSearch(const ObjectiveFunction& fn, const LbfgsOptions& opt, std::span<const double> x,
               std::span<const double> dir, double f0, double slope0)
        : fn_(fn), opt_(opt), x_(x), dir_(dir), f0_(f0), d0_(slope0) {}

    /// Returns the accepted point, or nothing after max_line_search trials.
    std::optional<Point> run(double alpha0) {
        Point prev{0.0, f0_, d0_, {}, {}};
        double alpha = alpha0;
        for (int i = 0; i < opt_.max_line_search; ++i) {
            Point cur = eval(alpha);
            if (!armijo(cur) || (i > 0 && cur.value >= prev.value)) {
                return zoom(std::move(prev), std::move(cur));
            }
            if (std::abs(cur.slope) <= -opt_.c2 * d0_) {
                return cur;
            }
            if (cur.slope >= 0.0) {
                return zoom(std::move(cur), std::move(prev));
            }
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return std::nullopt;
    }

    int evaluations() const { return evaluations_; }

private:
    Point eval(double alpha) {
        Point p;
        p.alpha = alpha;
        p.x.resize(x_.size());
        p.grad.assign(x_.size(), 0.0);
        for (std::size_t i = 0; i < x_.size(); ++i) {
            p.x[i] = x_[i] + alpha * dir_[i];
        }
        ++evaluations_;
        try {
            p.value = fn_(p.x, p.grad);
        } catch (const NumericBlowup&) {
            p.value = std::numeric_limits<double>::infinity();
        }
        if (!std::isfinite(p.value)) {
            p.value = std::numeric_limits<double>::infinity();
            p.slope = std::numeric_limits<double>::quiet_NaN();
            return p;
        }
        p.slope = dot(p.grad, dir_);
        return p;
    }

    bool armijo(const Point& p) const { return p.value <= f0_ + opt_.c1 * p.alpha * d0_; }

    /// Trial inside (lo, hi) from the cubic through both ends, safeguarded.
    static double interpolate(const Point& lo, const Point& hi) {
        const double a = lo.alpha;
        const double b = hi.alpha;
        double t = 0.5 * (a + b);
        if (std::isfinite(hi.value) && std::isfinite(hi.slope)) {
            const double d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
            const double disc = d1 * d1 - lo.slope * hi.slope;
            if (disc >= 0.0) {
                const double d2 = std::copysign(std::sqrt(disc), b - a);
                const double c = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
                if (std::isfinite(c)) {
                    t = c;
                }
            }
        }
        const double lo_b = std::min(a, b);
        const double hi_b = std::max(a, b);
        const double margin = 0.1 * (hi_b - lo_b);
        if (t < lo_b + margin || t > hi_b - margin) {
            t = 0.5 * (a + b);
        }
        return t;
    }

    std::optional<Point> zoom(Point lo, Point hi) {
        for (int i = 0; i < opt_.max_line_search; ++i) {
            if (std::abs(hi.alpha - lo.alpha) <= 1e-14 * std::max(1.0, std::abs(lo.alpha))) {
                return std::nullopt;
            }
            Point cur = eval(interpolate(lo, hi));
            if (!armijo(cur) || cur.value >= lo.value) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -opt_.c2 * d0_) {
                return cur;
            }
            if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) {
                hi = std::move(lo);
            }
            lo = std::move(cur);
        }
        return std::nullopt;
    }

    const ObjectiveFunction& fn_;
    const LbfgsOptions& opt_;
    std::span<const double> x_;
    std::span<const double> dir_;
    double f0_;
    double d0_;
    int evaluations_ = 0;
};

struct Pair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

std::vector<double> two_loop(const std::deque<Pair>& mem, std::span<const double> g) {
    std::vector<double> q(g.begin(), g.end());
    std::vector<double> a(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
        a[k] = mem[k].rho * dot(mem[k].s, q);
        for (std::size_t i = 0; i < q.size(); ++i) {
            q[i] -= a[k] * mem[k].y[i];
        }
    }
    if (!mem.empty()) {
        const Pair& last = mem.back();
        const double scale = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& v : q) {
            v *= scale;
        }
    }
    for (std::size_t k = 0; k < mem.size(); ++k) {
        const double b = mem[k].rho * dot(mem[k].y, q);
        for (std::size_t i = 0; i < q.size(); ++i) {
            q[i] += mem[k].s[i] * (a[k] - b);
        }
    }
    for (double& v : q) {
        v = -v;
    }
    return q;
}

} // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFunction& fn, std::vector<double> x0, const LbfgsOptions& options,
                           const IterationCallback& callback) {
    options.validate();
    LbfgsResult res;
    res.x = std::move(x0);
    res.gradient.assign(res.x.size(), 0.0);
    res.value = fn(res.x, res.gradient);
    res.evaluations = 1;
    if (!std::isfinite(res.value)) {
        throw InvalidArgument("L-BFGS: objective is not finite at the starting point");
    }
    double gnorm = std::sqrt(dot(res.gradient, res.gradient));
    if (!std::isfinite(gnorm)) {
        throw InvalidArgument("L-BFGS: gradient is not finite at the starting point");
    }
    const double gtol = std::max(options.gtol_relative * gnorm, options.gtol_absolute);

    LbfgsIteration row;
    row.value = res.value;
    row.grad_norm = gnorm;
    row.evaluations = 1;
    res.trace.push_back(row);
    if (callback) {
        callback(row, res.x);
    }
    if (gnorm <= options.gtol_absolute) {
        res.status = LbfgsStatus::converged;
        return res;
    }

    std::deque<Pair> memory;
    res.status = LbfgsStatus::max_iterations;
    while (res.iterations < options.max_iterations) {
        std::vector<double> dir = two_loop(memory, res.gradient);
        double slope = dot(dir, res.gradient);
        if (!(slope < 0.0)) {
            memory.clear();
            dir = two_loop(memory, res.gradient);
            slope = dot(dir, res.gradient);
        }
        double alpha0 = memory.empty() ? 1.0 / std::sqrt(dot(dir, dir)) : 1.0;
        LineSearch ls(fn, options, res.x, dir, res.value, slope);
        std::optional<Point> acc = ls.run(alpha0);
        res.evaluations += ls.evaluations();
        int evals = ls.evaluations();
        if (!acc && !memory.empty()) {
            // Retry once along steepest descent with a fresh memory.
            memory.clear();
            dir = two_loop(memory, res.gradient);
            slope = dot(dir, res.gradient);
            LineSearch retry(fn, options, res.x, dir, res.value, slope);
            acc = retry.run(1.0 / std::sqrt(dot(dir, dir)));
            res.evaluations += retry.evaluations();
            evals += retry.evaluations();
        }
        if (!acc) {
            res.status = LbfgsStatus::line_search_failed;
            break;
        }

        Pair p;
        p.s.resize(res.x.size());
        p.y.resize(res.x.size());
        for (std::size_t i = 0; i < res.x.size(); ++i) {
            p.s[i] = acc->x[i] - res.x[i];
            p.y[i] = acc->grad[i] - res.gradient[i];
        }
        const double sy = dot(p.s, p.y);

        LbfgsIteration it;
        it.iteration = ++res.iterations;
        it.value = acc->value;
        it.grad_norm = std::sqrt(dot(acc->grad, acc->grad));
        it.step_norm = std::sqrt(dot(p.s, p.s));
        it.alpha = acc->alpha;
        it.evaluations = evals;
        it.armijo = acc->value <= res.value + options.c1 * acc->alpha * slope;
        it.curvature = std::abs(acc->slope) <= -options.c2 * slope;

        if (sy > 0.0) {
            p.rho = 1.0 / sy;
            memory.push_back(std::move(p));
            if (static_cast<int>(memory.size()) > options.memory) {
                memory.pop_front();
            }
        }
        res.x = std::move(acc->x);
        res.gradient = std::move(acc->grad);
        res.value = acc->value;
        res.trace.push_back(it);
        if (callback) {
            callback(it, res.x);
        }
        if (it.grad_norm <= gtol) {
            res.status = LbfgsStatus::converged;
            break;
        }
    }
    return res;
}

} // namespace dgreg
