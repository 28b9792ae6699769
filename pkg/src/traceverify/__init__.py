"""traceverify: trace-driven probabilistic verification.

Learn an abstract DTMC from logged system traces, model-check a reachability
threshold property on it, validate counterexamples statistically against the
live system, and refine the abstraction with machine-learned predicates until
the property is verified or refuted.
"""

from .abstraction import PredicateSet, abstract_state, abstract_trace, abstract_trace_set
from .counterexample import (
    AbstractPath, Counterexample, Exhausted, Truncated,
    build_counterexample, enumerate_paths, member,
)
from .dtmc import (
    CheckResult, Dtmc, ReachQuery, check, first_bit_target, load_model,
    path_probability, reach_probability, save_model, to_dot,
)
from .errors import (
    ConfigError, ModelFormatError, PredicateError, PropertyError,
    SamplerError, SolverError, TraceFormatError, TraceVerifyError,
)
from .learn import (
    LearnedDTMC, LearnerConfig, ModelSelection, PrefixTree, StateMerger,
    bic_score, build_prefix_tree, compatible, learn_dtmc, multi_step_prob,
    next_symbol_prob, select_model, termination_prob,
)
from .predicates import Predicate, parse_predicate
from .refinement import (
    TransitionStat, count_transition, identify_spurious_transitions, refine,
)
from .report import export_report, report_payload
from .simulate import ExternalCommandSampler, HiddenDtmcSimulator, Sampler, sample_batch
from .sprt import (
    ACCEPT_H0, ACCEPT_H1, SprtConfig, SprtTranscript, sprt_step, start_test,
    test_counterexample,
)
from .svm import LinearClassifier, minimize_features, train_linear_classifier
from .traces import (
    ConcreteTrace, TraceSet, VariableSchema, dump_traces, load_traces,
    parse_traces, save_traces, trace_statistics,
)
from .verify import (
    INCONCLUSIVE, VERIFIED, VIOLATED, Property, VerifyConfig, VerifyReport,
    parse_property, sample_bound, verify_traces,
)

__version__ = "0.1.0"
