#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdnse/config.hpp"
#include "sdnse/sdspace.hpp"

namespace sdnse::emb {

using sd::SdSpace;

/// Outcome of one property check. Checks with asserted == false only record
/// measurements; their passed flag is always true.
struct CheckReport {
    std::string name;
    bool asserted = true;
    bool passed = true;
    nlohmann::json data = nlohmann::json::object();
};
nlohmann::json to_json(const CheckReport& r);

/// Hoelder conjugate exponent (1 <-> inf).
double conjugate_exponent(double q);

/// sd_norm(f) <= c_q ||f||_q + tail with c_q = sup_{k<=K} ||E_k||_{q'} measured first.
CheckReport check_embedding_lp(const SdSpace& space, const SampledField& f, double q, int K);

/// The SD^2 norms of a weakly-null sequence must decay: the last half decreasing
/// and final < 0.05 * first.
CheckReport check_compactness(const SdSpace& space, const std::vector<SampledField>& sequence, int K);
/// f_m(x) = sin(m x_1) * bump(x) on every component, for the given frequencies.
/// Grid of the compactness surrogate: 2049 points on [-1.5, 1.5] along x_1,
/// 121 along the other axes.
GridSpec compactness_grid(int dim);
std::vector<SampledField> modulated_sequence(const GridSpec& grid, const std::vector<double>& frequencies,
                                             const std::vector<double>& center, double radius);
/// For translates leaving every fixed cube: |F_k(last)| must vanish for k <= k_fixed.
CheckReport check_translates(const SdSpace& space, const std::vector<SampledField>& sequence, int k_fixed, int K);

/// Duality F_k(D^alpha f) = -<d_j E_k, D^{alpha - e_j} f> for k <= K (j the first
/// axis with alpha_j > 0), and the ratio sd_norm(D^alpha f) / sd_norm(f) as a record.
CheckReport check_weak_derivative(const SdSpace& space, const SampledField& f, const std::array<int, 3>& alpha,
                                  int K, double tol = 1e-6);
SampledField apply_derivative(const SampledField& f, const std::array<int, 3>& alpha);
/// Largest |f| on the box boundary relative to max |f|.
double boundary_ratio(const SampledField& f);

CheckReport check_sobolev_membership(const SdSpace& space, const SampledField& f, int kmax, double p, int K);
CheckReport check_minkowski(const SdSpace& space, const SampledField& f, const SampledField& g, double p, int K);
CheckReport check_sdinfty_in_sdp(const SdSpace& space, const SampledField& f, double p, int K);

/// Lower bound on the BMO seminorm of one component: max mean oscillation over
/// all dyadic cubes of the box plus cube_samples random grid-aligned cubes.
double bmo_norm(const SampledField& g, int comp, int cube_samples, std::uint64_t seed);

/// u = sum_i d_i f^i for n vector fields f^i: finite sup_k |F_k(u)|, and the
/// pairing through the derivative F_k(d_i f^i) = -<d_i E_k, f^i>.
CheckReport check_bmo_inverse_pairing(const SdSpace& space, const std::vector<SampledField>& f_components, int K,
                                      int cube_samples, std::uint64_t seed, bool assert_duality, double tol = 1e-6);

struct GeneratorSpec {
    std::string name;
    std::string kind;  // gaussian | bump | oscillatory | translate-sequence | bmo-log
    std::map<std::string, std::string> params;
};

struct CorpusSpec {
    int dim = 2;
    int points = 81;
    double lo = -4.0;
    double hi = 4.0;
    int K = 200;
    std::uint64_t seed = 1;
    int bmo_samples = 10000;
    std::vector<double> frequencies{1, 2, 4, 8, 16, 32, 64, 128};
    std::vector<GeneratorSpec> items;
};

CorpusSpec default_corpus_spec(int dim = 2);
CorpusSpec load_corpus_spec(const KeyValueConfig& cfg);

struct CorpusItem {
    std::string name;
    std::string kind;
    std::vector<SampledField> fields;  // several for translate-sequence
};
std::vector<CorpusItem> build_corpus(const CorpusSpec& spec);
/// The corpus grid; bmo-log items use the same box with an even point count so
/// that x_1 = 0 falls on a cell midpoint.
GridSpec corpus_grid(const CorpusSpec& spec, bool punctured);

/// Runs every check over the corpus. all_passed is false when any asserted check fails.
nlohmann::json run_embeddings_suite(const CorpusSpec& spec, bool& all_passed);

}  // namespace sdnse::emb
