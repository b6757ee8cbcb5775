#pragma once

#include "filtrationlab/enlargement.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace filtrationlab {

enum class ScenarioKind {
    cox,
    mixture_ex41,
    mixture_ex42,
    own_filtration_exponential,
    fg_equal_inaccessible,
    common_shock,
    random
};

const char* to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

/// How the random kind forces S to vanish.
enum class ZeroMode { none, predictable, inaccessible, mixed };

const char* to_string(ZeroMode mode);
ZeroMode zero_mode_from_string(const std::string& name);

/// Parameters of every kind; each kind reads only the fields it needs.
struct ScenarioDescriptor {
    ScenarioKind kind = ScenarioKind::cox;
    int horizon = 4;              ///< analysis horizon T
    double lambda = 0.1;          ///< per-step hazard (cox, own_filtration_exponential)
    double lambda_high = 0.0;     ///< cox: if > 0, a coin chooses between lambda and lambda_high each step
    double alpha = 0.3;           ///< mixture_ex41: Q(A)
    std::array<double, 3> alphas{0.3, 0.3, 0.4}; ///< mixture_ex42: Q(A1), Q(A2), Q(A3)
    double coin_p = 0.5;          ///< head probability of the driving coin
    bool f_trivial = true;        ///< own_filtration_exponential: F trivial (true) or F = G (false)
    std::array<double, 3> shock_hazards{0.1, 0.15, 0.05}; ///< common_shock: name 0, name 1, joint
    std::uint64_t seed = 1;       ///< random
    int max_branching = 2;        ///< random: F children per node drawn in 1..max_branching
    int labels = 2;               ///< random: hidden labels per F path
    ZeroMode zero_mode = ZeroMode::none;
    double signal_probability = 0.0; ///< random: chance of a pre-default G signal (usually breaks (B))
    int max_atoms = 1024;         ///< random: atom budget
};

/// Expected outcome; absent fields are not checked.
struct ExpectedVerdict {
    std::optional<bool> invariant;
    std::optional<std::string> failed_clause;
    std::optional<bool> pseudo_stopping;
    std::optional<bool> reference_is_invariance_measure; ///< mart_part ≡ 0, so P = Q works
};

struct Scenario {
    std::string id;
    ScenarioDescriptor descriptor;
    EnlargementPair pair;
    ExpectedVerdict expected;
    int attempts = 1;  ///< rejection-sampling draws used (random kind)
};

/// Desk-scale guard. The refinement study raises the horizon limit for the one-atom-per-step Cox tree.
struct ScenarioLimits {
    int max_horizon = 12;
    int max_atoms = 4096;
};

/// Deterministic in the descriptor: the same seed gives a bit-identical scenario.
Scenario generate(const ScenarioDescriptor& descriptor, const std::string& id = {}, ScenarioLimits limits = {});

} // namespace filtrationlab
