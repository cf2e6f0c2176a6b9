#pragma once

#include <array>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "sdnse/field.hpp"
#include "sdnse/testfns.hpp"

namespace sdnse::sd {

using cplx = std::complex<double>;
using testfns::CubeIndex;
using testfns::TestFunctionFamily;

/// Truncated value of an SD quantity. tail_bound bounds |true - value|
/// (for inner products) or true - value (for norms, which only grow with K).
struct SdValue {
    cplx value;
    int K = 0;
    double tail_bound = 0.0;
    std::vector<std::string> warnings;
    double real() const { return value.real(); }
};

/// Precomputed quadrature weights turning a sampled field into F_1..F_K.
/// For each cube and axis the 1-D integral of the interpolation cardinal
/// functions is stored twice: plain, and weighted by the axis profile xi.
class FunctionalPlan {
public:
    FunctionalPlan(const GridSpec& grid, int interp_order, const TestFunctionFamily& family,
                   const std::vector<CubeIndex>& cubes);

    const GridSpec& grid() const { return grid_; }
    int interp_order() const { return interp_order_; }
    int size() const { return static_cast<int>(cubes_.size()); }
    bool under_resolved(int k) const { return cubes_.at(k - 1).under_resolved; }
    bool disjoint(int k) const { return cubes_.at(k - 1).disjoint; }

    cplx apply_one(int k, const SampledField& f) const;
    /// F_1..F_K in order; parallel over k, deterministic.
    std::vector<cplx> apply(const SampledField& f, int K) const;
    int under_resolved_count(int K) const;

private:
    struct AxisWeights {
        int start = 0;
        std::vector<double> plain;
        std::vector<cplx> weighted;
    };
    struct CubePlan {
        std::array<AxisWeights, 3> axis;
        bool disjoint = false;
        bool under_resolved = false;
    };

    GridSpec grid_;
    int interp_order_;
    std::vector<CubePlan> cubes_;
};

/// Shared state for SD computations in one dimension: the test-function
/// family, the cube list up to K_max, and per-grid functional plans.
class SdSpace {
public:
    SdSpace(int dim, int K_max, testfns::FamilySettings settings = {});

    int dim() const { return dim_; }
    int K_max() const { return static_cast<int>(cubes_.size()); }
    const TestFunctionFamily& family() const { return *family_; }
    const CubeIndex& cube(int k) const { return cubes_.at(k - 1); }

    std::shared_ptr<const FunctionalPlan> plan(const GridSpec& grid, int interp_order) const;

    /// ||E_k||_q of the full (unclipped) field, Euclidean magnitude; q = inf allowed.
    double e_norm(int k, double q) const;
    /// sup_{k<=K} ||E_k||_q.
    double e_norm_sup(int K, double q) const;

private:
    double compute_e_norm(int k, double q) const;

    int dim_;
    std::vector<CubeIndex> cubes_;
    std::unique_ptr<TestFunctionFamily> family_;
    mutable std::mutex mutex_;
    mutable std::map<std::tuple<int, int, int, int, double, double, double, double, double, double, int>,
                     std::shared_ptr<const FunctionalPlan>>
        plans_;
    mutable std::map<std::pair<int, double>, double> enorm_cache_;
};

/// Highest level l among the first K cubes.
int max_level_for(int K);

cplx functional_F(const SdSpace& space, int k, const SampledField& f, bool* under_resolved = nullptr);
SdValue sd_inner(const SdSpace& space, const SampledField& f, const SampledField& g, int K);
SdValue sd_norm_p(const SdSpace& space, const SampledField& f, double p, int K);
inline SdValue sd_norm(const SdSpace& space, const SampledField& f, int K) { return sd_norm_p(space, f, 2.0, K); }
/// Per-functional bound B_f with |F_k(f)| <= B_f for every k.
double functional_bound(const SampledField& f);

/// sup over grid-aligned origin-centred cubes of |integral of f| for the
/// piecewise-constant grid representative. Needs equal spacing on every axis
/// and the origin on a node or a cell midpoint of each axis.
double alexiewicz_norm(const SampledField& f, int comp = 0);
/// sup over y of |integral over [y, b] of f|, b the upper box corner.
double anchored_box_norm(const SampledField& f, int comp = 0);
/// Sum over cells of the absolute mixed n-th difference. With zero_extend the
/// field is padded by zeros below every lower face first.
double vitali_variation(const SampledField& g, int comp = 0, bool zero_extend = false);

struct HkReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double alexiewicz = 0.0;
    double anchored = 0.0;
    double variation = 0.0;
    double variation_zero_extended = 0.0;
    bool vanishes_at_lower_faces = true;
    bool satisfied = false;
};
HkReport hk_pairing_bound(const SampledField& f, const SampledField& g, int fcomp = 0, int gcomp = 0);

struct Lemma17Report {
    double lhs = 0.0;  // sd_norm(f)^2
    double rhs = 0.0;  // ||f||^2 (sup_k V(E_k))^2 + tail
    double sup_variation = 0.0;
    double f_norm = 0.0;
    double tail = 0.0;
    bool satisfied = false;
};
/// Bound of the HK-integrable-functions-are-in-SD^2 argument, with the
/// anchored box norm per component and the variation of E_k clipped to the box.
Lemma17Report lemma17_bound(const SdSpace& space, const SampledField& f, int K);
/// Vitali variation of component m of E_k clipped to the grid box.
double e_variation(const SdSpace& space, int k, int m, const GridSpec& box);

/// Node weights along one axis such that sum_i w_i v_i integrates (or point-
/// evaluates) the interpolant of the node values v against a 1-D profile.
struct AxisWeights1D {
    int start = 0;
    std::vector<cplx> w;
};
AxisWeights1D axis_integral_weights(const GridSpec& grid, int axis, int interp_order, double lo, double hi,
                                    const std::function<cplx(double)>& profile, std::vector<double> breaks,
                                    double max_panel);
AxisWeights1D axis_point_weights(const GridSpec& grid, int axis, int interp_order, double x0, cplx scale = 1.0);
/// sum over nodes of f_comp times the product of the per-axis weights.
cplx contract_separable(const SampledField& f, int comp, const std::array<AxisWeights1D, 3>& w);

/// Distributional pairing <d_j E_k, f> over the box: the interior term with
/// xi' plus the jumps of E_k across the two cube faces normal to axis j.
/// For f vanishing on the box boundary this equals -F_k(d_j f).
cplx derivative_pairing(const SdSpace& space, int k, int axis, const SampledField& f);

}  // namespace sdnse::sd
