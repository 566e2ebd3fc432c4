#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace kelly::quad {

// Globally adaptive 7-point Gauss / 15-point Kronrod integration of a
// vector-valued integrand, QUADPACK QAG style. The integrand is supplied as
// a batch evaluator so the caller decides how nodes are evaluated (serially
// or across threads); node order and accumulation order are fixed, so the
// result is the same either way.

struct Options {
    double abs_tol = 1e-12;
    double rel_tol = 0.0;
    int initial_panels = 4;
    int max_panels = 4000;
    // Only the first `checked` components drive convergence (0 = all).
    std::size_t checked = 0;
};

struct Result {
    std::vector<double> value;
    std::vector<double> error;
    int panels = 0;
    bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline constexpr std::size_t nodes_per_panel = 15;

// Abscissae of a panel in the order consumed by combine().
inline void panel_nodes(double a, double b, std::span<double> out) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t j = 0; j < 7; ++j) {
        out[2 * j] = centre - half * kronrod_nodes[j];
        out[2 * j + 1] = centre + half * kronrod_nodes[j];
    }
    out[14] = centre;
}

// Writes the panel's Kronrod estimate and error per component; returns the
// largest error among the first `checked` components. values holds
// nodes_per_panel rows of m entries.
inline double combine(double a, double b, std::span<const double> values, std::size_t m, std::size_t checked,
                      double* value_out, double* error_out) {
    const double half = 0.5 * (b - a);
    const double abs_half = std::abs(half);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double tiny = std::numeric_limits<double>::min();
    double worst = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        auto v = [&](std::size_t node) { return values[node * m + c]; };
        const double fc = v(14);
        double kron = kronrod_weights[7] * fc;
        double gauss = gauss_weights[3] * fc;
        double resabs = std::abs(kron);
        for (std::size_t j = 0; j < 7; ++j) {
            const double pair = v(2 * j) + v(2 * j + 1);
            kron += kronrod_weights[j] * pair;
            resabs += kronrod_weights[j] * (std::abs(v(2 * j)) + std::abs(v(2 * j + 1)));
            if (j % 2 == 1) gauss += gauss_weights[j / 2] * pair;
        }
        const double mean = 0.5 * kron;
        double resasc = kronrod_weights[7] * std::abs(fc - mean);
        for (std::size_t j = 0; j < 7; ++j)
            resasc += kronrod_weights[j] * (std::abs(v(2 * j) - mean) + std::abs(v(2 * j + 1) - mean));

        double err = std::abs((kron - gauss) * half);
        resasc *= abs_half;
        resabs *= abs_half;
        if (resasc != 0.0 && err != 0.0) {
            const double r = 200.0 * err / resasc;
            err = resasc * std::min(1.0, r * std::sqrt(r));
        }
        if (resabs > tiny / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);

        value_out[c] = kron * half;
        error_out[c] = err;
        if (c < checked) worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace detail

// eval(nodes, out): fill out[i * m + c] with component c at nodes[i].
template <class BatchEval>
Result integrate_batch(BatchEval&& eval, std::size_t m, double a, double b, const Options& opt = {}) {
    using detail::nodes_per_panel;
    Result res;
    res.value.assign(m, 0.0);
    res.error.assign(m, 0.0);
    if (m == 0 || a == b) {
        res.converged = true;
        return res;
    }

    const std::size_t checked = opt.checked == 0 ? m : std::min(m, opt.checked);

    // Panel i owns value[i*m, (i+1)*m) and error[i*m, (i+1)*m). Retired
    // panels keep their slot but leave the heap and the running totals.
    struct Span {
        double a;
        double b;
    };
    std::vector<Span> spans;
    std::vector<double> value;
    std::vector<double> error;
    std::vector<char> live;
    std::vector<std::pair<double, std::size_t>> heap;
    std::vector<double> total_value(m, 0.0);
    std::vector<double> total_error(m, 0.0);
    std::vector<double> nodes;
    std::vector<double> values;

    auto evaluate = [&](std::span<const Span> intervals) {
        nodes.resize(intervals.size() * nodes_per_panel);
        for (std::size_t i = 0; i < intervals.size(); ++i)
            detail::panel_nodes(intervals[i].a, intervals[i].b,
                                std::span<double>(nodes).subspan(i * nodes_per_panel, nodes_per_panel));
        values.assign(nodes.size() * m, 0.0);
        eval(std::span<const double>(nodes), std::span<double>(values));
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            const std::size_t slot = spans.size();
            spans.push_back(intervals[i]);
            value.resize(value.size() + m);
            error.resize(error.size() + m);
            live.push_back(1);
            const double worst = detail::combine(
                intervals[i].a, intervals[i].b,
                std::span<const double>(values).subspan(i * nodes_per_panel * m, nodes_per_panel * m), m, checked,
                value.data() + slot * m, error.data() + slot * m);
            for (std::size_t c = 0; c < m; ++c) {
                total_value[c] += value[slot * m + c];
                total_error[c] += error[slot * m + c];
            }
            heap.emplace_back(worst, slot);
            std::push_heap(heap.begin(), heap.end());
        }
    };

    const int initial = std::max(1, opt.initial_panels);
    std::vector<Span> first;
    for (int i = 0; i < initial; ++i)
        first.push_back({a + (b - a) * i / initial, i + 1 == initial ? b : a + (b - a) * (i + 1) / initial});
    evaluate(first);

    auto done = [&] {
        for (std::size_t c = 0; c < checked; ++c)
            if (total_error[c] > std::max(opt.abs_tol, opt.rel_tol * std::abs(total_value[c]))) return false;
        return true;
    };

    int count = initial;
    res.converged = done();
    while (!res.converged && count < opt.max_panels) {
        std::pop_heap(heap.begin(), heap.end());
        const std::size_t slot = heap.back().second;
        const double lo = spans[slot].a;
        const double hi = spans[slot].b;
        const double mid = 0.5 * (lo + hi);
        if (!(mid > std::min(lo, hi) && mid < std::max(lo, hi))) {
            std::push_heap(heap.begin(), heap.end());
            break;
        }
        heap.pop_back();
        live[slot] = 0;
        for (std::size_t c = 0; c < m; ++c) {
            total_value[c] -= value[slot * m + c];
            total_error[c] -= error[slot * m + c];
        }
        const std::array<Span, 2> halves{{{lo, mid}, {mid, hi}}};
        evaluate(halves);
        ++count;
        res.converged = done();
    }

    // Final sums in ascending abscissa order, independent of refinement order.
    std::vector<std::size_t> order;
    order.reserve(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < spans.size(); ++i)
        if (live[i]) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return spans[x].a < spans[y].a; });
    for (const std::size_t i : order) {
        for (std::size_t c = 0; c < m; ++c) {
            res.value[c] += value[i * m + c];
            res.error[c] += error[i * m + c];
        }
    }
    res.panels = static_cast<int>(order.size());
    return res;
}

struct ScalarResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

template <class F>
ScalarResult integrate(F&& f, double a, double b, const Options& opt = {}) {
    auto r = integrate_batch(
        [&](std::span<const double> nodes, std::span<double> out) {
            for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = f(nodes[i]);
        },
        1, a, b, opt);
    return {r.value[0], r.error[0], r.converged};
}

}  // namespace kelly::quad
