#pragma once

#include <iosfwd>
#include <memory>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "tightkit/vec3.hpp"

namespace tightkit {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// A point of a 2D parameter domain. Serves both the native (u,v) chart of a
// surface and the (x,t) charts built by adapted_coords.
struct ParamPoint {
    double u = 0.0;
    double v = 0.0;
};

struct Axis {
    double lo = 0.0;
    double hi = kTwoPi;
    bool periodic = true;

    double length() const { return hi - lo; }
    double reduce(double s) const;
    bool contains(double s, double slack = 0.0) const;
};

struct Domain {
    Axis u;
    Axis v;

    ParamPoint reduce(ParamPoint p) const { return {u.reduce(p.u), v.reduce(p.v)}; }
    bool contains(ParamPoint p, double slack = 0.0) const {
        return u.contains(p.u, slack) && v.contains(p.v, slack);
    }
};

// Default normal is (X_u x X_v)/|X_u x X_v|; Flipped negates it (and with it
// the second fundamental form).
enum class Orientation { Standard, Flipped };

inline double orientation_sign(Orientation o) { return o == Orientation::Standard ? 1.0 : -1.0; }

struct SphereFamily {
    double radius = 1.0;
};

// X = ((R + r cos u) cos v, (R + r cos u) sin v, r sin u).
struct TorusFamily {
    double R = 2.0;
    double r = 1.0;
};

// Torus whose tube radius is modulated: r(u,v) = r (1 + eps cos(p u) cos(q v)).
struct PerturbedTorusFamily {
    double R = 2.0;
    double r = 1.0;
    double eps = 0.05;
    int p = 2;
    int q = 3;
};

// Torus of revolution whose profile height is r(-cos u / 2 + sin 2u / 4); the
// profile has a double critical point at u = pi/2, where K vanishes to third
// order across the parallel.
struct FlattenedTorusFamily {
    double R = 2.0;
    double r = 1.0;
};

// Flat patch X = (u, v, 0) over [-half_width, half_width]^2.
struct PlaneFamily {
    double half_width = 1.0;
};

// Surface sampled on a rectangular parameter grid; jets come from local
// degree-5 tensor Lagrange interpolation of the node positions.
struct SampledGrid {
    int nu = 0;
    int nv = 0;
    bool periodic_u = false;
    bool periodic_v = false;
    int euler_characteristic = 0;
    double u0 = 0.0, du = 1.0;
    double v0 = 0.0, dv = 1.0;
    std::vector<Vec3> nodes;  // row-major, index i * nv + j (u outer)

    const Vec3& at(int i, int j) const { return nodes[static_cast<std::size_t>(i) * nv + j]; }
    Domain domain() const;
};

using SurfaceFamily = std::variant<SphereFamily, TorusFamily, PerturbedTorusFamily,
                                   FlattenedTorusFamily, PlaneFamily,
                                   std::shared_ptr<const SampledGrid>>;

class Surface {
public:
    explicit Surface(SurfaceFamily family, Orientation orientation = Orientation::Standard);

    static Surface sphere(double radius = 1.0);
    static Surface torus(double R = 2.0, double r = 1.0);
    static Surface perturbed_torus(double R, double r, double eps, int p = 2, int q = 3);
    static Surface flattened_torus(double R = 2.0, double r = 1.0);
    static Surface plane(double half_width = 1.0);
    static Surface sampled(std::shared_ptr<const SampledGrid> grid);

    const SurfaceFamily& family() const { return family_; }
    const Domain& domain() const { return domain_; }
    Orientation orientation() const { return orientation_; }
    int euler_characteristic() const { return chi_; }
    std::string family_name() const;

    Surface with_orientation(Orientation o) const;
    Surface flipped() const;

private:
    SurfaceFamily family_;
    Domain domain_;
    Orientation orientation_;
    int chi_ = 0;
};

// Position and partial derivatives through third order; mixed partials are
// stored once.
struct Jet {
    Vec3 x;
    Vec3 xu, xv;
    Vec3 xuu, xuv, xvv;
    Vec3 xuuu, xuuv, xuvv, xvvv;
};

// Throws DomainError for points outside a non-periodic axis.
Jet eval_jet(const Surface& s, ParamPoint p);

// Sampled-grid text format. Header: `grid <nu> <nv> <periodic_u> <periodic_v>
// <euler_characteristic>`; then nu*nv rows `u v x y z`, u outer.
std::shared_ptr<SampledGrid> read_sampled_grid(std::istream& in);
std::shared_ptr<SampledGrid> load_sampled_grid(const std::string& path);
void write_sampled_grid(std::ostream& out, const SampledGrid& grid);

// Samples an analytic surface on an n_u x n_v grid covering its domain.
std::shared_ptr<SampledGrid> sample_surface(const Surface& s, int nu, int nv);

}  // namespace tightkit
