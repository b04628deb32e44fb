"""Ground-truth evaluation of feature-based explainers on select-then-predict models.

The package builds verified evaluation datasets from deterministic
generator/encoder target models (pruning instances whose selection could
leak information about non-selected tokens, and anchoring each survivor
with clearly relevant tokens), runs reference explainers spanning the
additive-attribution and sufficient-subset views, and scores their
rankings with three error metrics.
"""
from .builtin import (
    demo_instances,
    handshake_free_rule_model,
    handshake_rule_model,
    review_lexicon_model,
    sentiment_rule_model,
    synthetic_corpus_spec,
)
from .corpus import CorpusGenSpec, gen_corpus, load_corpus, write_corpus
from .explainers import (
    AttributionVector,
    CoalitionValues,
    ExplainerConfig,
    InstanceTooLongError,
    Ranking,
    derive_seed,
    exact_shapley,
    greedy_sufficient_subset,
    lime_rank,
    occlusion_rank,
    pad_ranking,
    random_rank,
    sampled_shapley,
    to_ranking,
)
from .harness import (
    HarnessConfig,
    PruningStats,
    Rejection,
    RejectionReason,
    SelectionPartition,
    VerifiedInstance,
    check_no_handshake,
    clearly_relevant_set,
    load_verified_dataset,
    verify_corpus,
    verify_instance,
    write_verified_dataset,
)
from .heatmap import render_heatmap
from .metrics import (
    InstanceVerdict,
    MetricsReport,
    aggregate,
    judge_instance,
    oracle_judge,
    oracle_ranking,
)
from .models import (
    Instance,
    LexiconModel,
    Rule,
    RuleModel,
    Selection,
    TargetModel,
    encode,
    generate,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    predict_masked,
    restrict,
    save_model,
)
from .pipeline import ExplainerSpec, RunConfig, load_run_config, run_pipeline

__version__ = "0.1.0"
