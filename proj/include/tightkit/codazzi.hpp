#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tightkit/chart.hpp"
#include "tightkit/error.hpp"
#include "tightkit/forms.hpp"

namespace tightkit {

using Mat2 = std::array<std::array<double, 2>, 2>;

// Structured (x,t) grid the system is assembled on.
struct SystemGrid {
    double x_lo = 0.0, x_hi = 1.0;
    double t_lo = 0.0, t_hi = 1.0;
    int nx = 65, nt = 33;
    bool periodic_x = false;  // periodic grids omit the node at x_hi

    double hx() const { return (x_hi - x_lo) / (periodic_x ? nx : nx - 1); }
    double ht() const { return (t_hi - t_lo) / (nt - 1); }
    double x_at(int i) const { return x_lo + i * hx(); }
    double t_at(int j) const { return t_lo + j * ht(); }
};

struct BaseForms {
    double E = 1.0, F = 0.0, G = 1.0;
    double L = 0.0, M = 0.0, N = 0.0;
    std::optional<CodazziCoefficients> k;  // prescribed coefficients; metric-derived when empty
};
using BaseSampler = std::function<BaseForms(double x, double t)>;

// Forms of a source in its own parameters; swap_axes reads (x,t) = (v,u).
BaseSampler sampler(std::shared_ptr<const FormSource> src, bool swap_axes = false);

// Base data and derivatives at one grid node.
struct NodeData {
    double E = 1.0, F = 0.0, G = 1.0;
    double L = 0.0, M = 0.0, N = 0.0;
    double Lx = 0.0, Lt = 0.0, Mx = 0.0, Mt = 0.0, Nx = 0.0, Nt = 0.0;
    double detI = 1.0;
    double detI_x = 0.0;
    CodazziCoefficients k;
};

// Perturbation jet: U = (v, w) = (M~ - M, N~ - N) and its first derivatives.
struct StateJet {
    double v = 0.0, w = 0.0;
    double vx = 0.0, vt = 0.0, wx = 0.0, wt = 0.0;
};

struct SystemMatrices {
    Mat2 A1{}, A2{}, B{};
};

// A1 U_x + A2 U_t + B U = 0 with A1 = (0,-N;-N,2M), A2 = diag(N,-L).
class SystemField {
public:
    SystemGrid grid;
    std::vector<NodeData> nodes;  // i * nt + j
    int sign = 1;                 // -1 once the system is multiplied through by -1
    double threshold = 1e-8;      // lower bound on |N + w|
    SignPattern pattern = SignPattern::None;
    std::string source;

    const NodeData& node(int i, int j) const { return nodes[static_cast<std::size_t>(i) * grid.nt + j]; }
    // Degree-5 interpolation of the node data; throws DomainError off the grid.
    NodeData at(double x, double t) const;
    bool contains(double x, double t) const;
    SystemField negated() const;
};

// Forms sampled on the grid; every derivative comes from grid differences.
SystemField assemble(const BaseSampler& base, const SystemGrid& grid, const std::string& source = "sampled");
// Chart components on the chart's own node grid.
SystemField assemble(const Chart& chart);

// State-dependent B as displayed, or B at U = 0 when quasilinear is false.
SystemMatrices system_matrices(const NodeData& d, const StateJet& s, int sign = 1, bool quasilinear = true,
                               double threshold = 1e-8);

// u = (-L w + 2 M v + v^2) / (N + w).
double reconstruct_u(double L, double M, double N, double v, double w, double threshold = 1e-8);
// (L + u)(N + w) - (M + v)^2 - (L N - M^2).
double gauss_defect(double L, double M, double N, double u, double v, double w);

// Slopes dt/dx of the characteristics, kappa_minus < kappa_plus.
struct CharacteristicSlopes {
    double minus = 0.0, plus = 0.0;
    bool real = false;
};
CharacteristicSlopes characteristic_slopes(const NodeData& d);

// Symmetrizers: U = exp(Lambda) Ubar with Lambda = lambda + lambda0 t.
enum class SymmetrizerKind { Identity, Boundary, ClosedCurve, ClosedCurveF };
std::string to_string(SymmetrizerKind k);

struct PositivityReport {
    bool passed = false;
    double min_eigenvalue = 0.0;
    double at_x = 0.0, at_t = 0.0;
    double max_eigenvalue = 0.0;
    double min_flux_eigenvalue = 0.0;  // over characteristic sides or the t = delta edge
    bool flux_ok = false;
    int nodes = 0;
};

struct Symmetrizer {
    SymmetrizerKind kind = SymmetrizerKind::Identity;
    int system_sign = 1;
    // On the field grid.
    std::vector<double> lambda, lambda_x, lambda_t;
    double lambda_bar = 0.0;  // boundary kind
    double lambda0 = 0.0;     // closed kinds
    double epsilon = 0.0;     // closed-curve kind
    double bump_center = 0.0, bump_concentration = 0.0;
    std::vector<double> lambda2;  // closed kinds, on the grid, x-periodic
    std::vector<double> f;        // f kind, per t row
    int flux_rows = 0;            // grid rows covered by the certificate
    double delta = 0.0;           // certified t extent above the grid's t_lo
    int searched = 0;             // parameter sets tried
    PositivityReport report;

    // Lambda and its gradient at a point of the grid.
    std::array<double, 3> weight(const SystemField& field, double x, double t) const;
    // Same symmetrizer with lambda shifted by a constant.
    Symmetrizer shifted(double c) const;
};

struct SymmetrizerControls {
    double lambda_bar_seed = 1.0 / 64.0;
    int max_doublings = 40;
    double lambda0_seed = 1.0 / 8.0;
    std::vector<double> epsilons{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
    std::vector<double> concentrations{4.0, 16.0, 64.0};
    int min_delta_rows = 4;
};

// Search budget exhausted; best carries the attempt with the largest min eigenvalue.
class SymmetrizerSearchError : public ConvergenceError {
public:
    SymmetrizerSearchError(const std::string& w, PositivityReport b) : ConvergenceError(w), best(b) {}
    PositivityReport best;
};

Symmetrizer build_symmetrizer(const SystemField& field, SymmetrizerKind kind, const SymmetrizerControls& ctl = {});
Symmetrizer identity_symmetrizer(const SystemField& field);

// sym(calB) = (calB + calB*)/2 with calB = B + Lambda_x A1 + Lambda_t A2 - A1_x/2 - A2_t/2.
Mat2 energy_matrix(const SystemField& field, const Symmetrizer& sym, double x, double t, const StateJet& s = {},
                   bool quasilinear = true);

// Scans sym(calB) at the zero state over rows t <= t_lo + delta and checks
// the boundary flux matrices A1 nu1 + A2 nu2 on characteristic sides
// (boundary kind) or on the top edge (closed kinds).
PositivityReport positivity_certificate(const SystemField& field, const Symmetrizer& sym, double delta = -1.0);

// (1/2) Ubar*(A1 nu1 + A2 nu2) Ubar.
double boundary_flux(const NodeData& d, int sign, std::array<double, 2> nu, std::array<double, 2> ubar);

// Cauchy data on t = t0, or Goursat data on the two characteristics through a corner.
struct CauchyData {
    double t0 = 0.0;
    double x_lo = 0.0, x_hi = 1.0;
    int n = 65;               // data nodes (periodic: per period, x_hi excluded)
    bool periodic = false;
    std::function<std::array<double, 2>(double x)> U;  // (v, w); zero when empty
    int max_levels = -1;      // periodic runs: levels to march, -1 up to the grid top
};

struct GoursatData {
    ParamPoint corner{0.0, 0.0};
    double length_plus = 0.5, length_minus = 0.5;  // x extents of the two data curves
    int n_plus = 32, n_minus = 32;
    std::function<std::array<double, 2>(double x, double t)> on_plus, on_minus;  // zero when empty
};

struct SolverControls {
    bool quasilinear = true;
    double speed_floor = 1e-4;   // min |dt/dx| of either characteristic
    int corrector_sweeps = 2;
};

struct StateNode {
    double x = 0.0, t = 0.0;
    double v = 0.0, w = 0.0, u = 0.0;
};

// Solution on a characteristic grid, with a triangulation of the computed
// domain of determinacy and its counter-clockwise boundary.
struct CodazziState {
    std::vector<StateNode> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::vector<int>> boundary;  // pieces in counter-clockwise order
    std::vector<std::string> boundary_names;
    bool periodic = false;
    double period = 0.0;
    bool quasilinear = true;
    bool stopped_at_collar = false;
    int levels = 0;
    double t_min = 0.0, t_max = 0.0;
    double max_gauss_defect = 0.0;

    double max_abs_U() const;
};

CodazziState solve(const SystemField& field, const CauchyData& data, const SolverControls& ctl = {});
CodazziState solve(const SystemField& field, const GoursatData& data, const SolverControls& ctl = {});

// Piecewise-linear value of the state at a point inside its triangulation.
std::optional<std::array<double, 2>> sample_state(const CodazziState& s, double x, double t);

struct BoundaryTerm {
    std::string name;
    double value = 0.0;
};

struct EnergyLedger {
    double interior = 0.0;
    std::vector<BoundaryTerm> boundary;
    double boundary_total = 0.0;
    double residual = 0.0;           // interior + boundary_total
    double relative_residual = 0.0;  // against the sum of magnitudes
    double min_eigenvalue = 0.0;     // of sym(calB) over the triangles
    double weighted_norm = 0.0;      // integral of q t^p |Ubar|^2
    double margin = 0.0;             // interior - weighted_norm
};

struct AuditControls {
    double q = 0.0;
    double weight_power = 0.0;
};

EnergyLedger energy_audit(const SystemField& field, const Symmetrizer& sym, const CodazziState& state,
                          const AuditControls& ctl = {});

// Snapshot x,t,v,w,u.
void write_state_csv(const CodazziState& s, std::ostream& out);

}  // namespace tightkit
