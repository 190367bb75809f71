"""Entropy bounds and structural analysis for the bit-shift (jitter) channel.

The library builds the channel as a function of a finite hidden Markov chain,
computes certified upper/lower bounds on the entropy rate of the output
process by greedy or uniform cylinder refinement, derives mutual information
curves and capacity lower bounds, cross-checks entropies through first-return
(induced map) series, and analyzes the output shift as a sofic system
(minimal forbidden words, topological entropy).
"""

__version__ = "0.1.0"

from .capacity import (
    CapacitySearchConfig,
    CapacitySearchResult,
    MiResult,
    SweepPoint,
    capacity_lower_bound,
    mi_sweep,
    mutual_information,
)
from .channel import (
    HiddenState,
    JitterParams,
    SourceDist,
    build_joint_chain,
    jitter_entropy,
    make_source,
    output_alphabet,
    output_marginal,
)
from .errors import (
    BadParams,
    BadProbabilities,
    BitshiftError,
    ConvergenceFailure,
    DegenerateRenewal,
    DomainError,
    EmptyPartition,
    LetterOutOfRange,
    NonStochastic,
    NotALeaf,
    Reducible,
    ResourceLimit,
    UsageError,
)
from .markov import MarkovChainModel, build_chain, entropy_rate_markov, sample_path
from .refine import (
    CylinderCalculator,
    CylinderStat,
    EntropyInterval,
    PartitionState,
    birch_bounds,
    birch_profile,
    refine_leaf,
    root_partition,
    run_bounds,
    select_next,
)
from .renewal import (
    ReturnWordTable,
    renewal_base_probability,
    renewal_entropy_estimate,
    return_word_probabilities,
)
from .sofic import (
    DeterministicPresentation,
    LabeledPresentation,
    count_words,
    determinize,
    minimal_forbidden_words,
    presentation,
    topological_entropy,
    word_admissible,
)
