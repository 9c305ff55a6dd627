#pragma once

// Projections used by the minimax subproblem solvers: Euclidean ball,
// hyperplane, and their intersection in closed form.

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "fcbio/core.hpp"

namespace fcbio {

// The set { x : <normal, x> + offset = 0 }.
struct Hyperplane {
    Vector normal;
    double offset = 0.0;

    Hyperplane(Vector normal_, double offset_) : normal(std::move(normal_)), offset(offset_) {
        if (!all_finite(normal) || !std::isfinite(offset))
            throw std::invalid_argument("Hyperplane: entries not finite");
        if (squared_norm(normal) == 0.0)
            throw std::invalid_argument("Hyperplane: normal must be nonzero");
    }

    double evaluate(const Vector& x) const { return dot(normal, x) + offset; }
};

inline Vector project_ball(const Vector& z, const Ball& ball) { return ball.project(z); }

inline Vector project_hyperplane(const Vector& z, const Hyperplane& h) {
    const double wn2 = squared_norm(h.normal);
    const double step = h.evaluate(z) / wn2;
    Vector out = z;
    axpy(-step, h.normal, out);
    return out;
}

// Projection onto ball /\ hyperplane. Project onto the hyperplane first; if
// that point is inside the ball it is optimal, otherwise the optimum sits on
// the circle bounding the ball's slice through the hyperplane and is reached
// radially from the slice's center. Every branch is a linear combination of
// z, the ball center, and the normal, so coordinates untouched by all three
// stay exactly zero.
inline Vector project_ball_hyperplane(const Vector& z, const Ball& ball, const Hyperplane& h) {
    if (z.size() != ball.dim() || h.normal.size() != ball.dim())
        throw std::invalid_argument("project_ball_hyperplane: dimension mismatch");
    const double wn2 = squared_norm(h.normal);
    const double wn = std::sqrt(wn2);

    const double center_step = h.evaluate(ball.center()) / wn2;
    const double center_dist = std::fabs(center_step) * wn;
    if (center_dist > ball.radius() + 1e-10)
        throw InfeasibleSubproblemError("project_ball_hyperplane: ball and hyperplane are disjoint");

    Vector on_plane = z;
    axpy(-h.evaluate(z) / wn2, h.normal, on_plane);
    if (distance(on_plane, ball.center()) <= ball.radius()) return on_plane;

    // Center of the slice and its radius within the hyperplane.
    Vector slice_center = ball.center();
    axpy(-center_step, h.normal, slice_center);
    const double r2 = ball.radius() * ball.radius() - center_step * center_step * wn2;
    const double r = r2 > 0.0 ? std::sqrt(r2) : 0.0;
    if (r == 0.0) return slice_center;

    Vector d = on_plane;
    axpy(-1.0, slice_center, d);
    const double dn = norm(d);
    if (dn > 0.0) {
        Vector out = slice_center;
        axpy(r / dn, d, out);
        return out;
    }

    // Target sits exactly over the slice center; any direction inside the
    // hyperplane is a minimizer. Take the lowest-index basis direction with a
    // nonzero in-plane component so the choice is deterministic.
    for (std::size_t i = 0; i < z.size(); ++i) {
        Vector dir(z.size(), 0.0);
        dir[i] = 1.0;
        axpy(-h.normal[i] / wn2, h.normal, dir);
        const double len = norm(dir);
        if (len > 0.0) {
            Vector out = slice_center;
            axpy(r / len, dir, out);
            return out;
        }
    }
    throw std::logic_error("project_ball_hyperplane: no in-plane direction found");
}

}  // namespace fcbio
