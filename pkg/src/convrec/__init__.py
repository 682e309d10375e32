"""Adaptive Bayesian conversational recommendation engine.

Compatibility-elicited priors over a catalogue, exact posterior updating
on answers, entropy-driven question selection with a tunable stopping
rule, Dirichlet blending of expert tables with observed sessions, and a
replay/metrics harness. A FastAPI service and a click CLI wrap it all.
"""

from .adaptive import (
    Stop,
    StoppingConfig,
    Transcript,
    conditional_entropy,
    next_question,
    run_conversation,
    stopping_threshold,
)
from .catalog import CatalogModel, load_catalog, catalog_to_dict, versatility
from .elicitation import combine_questions, elicit_ujs, elicit_ups
from .engine import EngineModel, compile_model, normalized_entropy
from .errors import (
    AnswerSourceError,
    CatalogError,
    ConvrecError,
    ElicitationError,
    EnumerationCapError,
    InferenceError,
    ObservationError,
)
from .evaluation import (
    ReplayMetrics,
    SessionRecord,
    ThresholdSweep,
    emit_report,
    fraction_items_retained,
    generate_synthetic_catalog,
    generate_synthetic_log,
    read_replay_log,
    replay,
    sweep_threshold,
    write_replay_log,
)
from .inference import (
    ConversationState,
    brute_force_oracle,
    exact_sequential_posterior,
    init_session,
    posterior_property_inference,
    ranked_items,
    retained,
    update,
)
from .kernels import backend_name
from .learning import (
    DirichletParams,
    Observation,
    learn_tables,
    learned_tables_document,
    observations_from_log,
    posterior_mean_cpt,
    prior_to_pseudocounts,
    read_observation_log,
    update_from_log,
)
from .property_net import (
    PropertyModel,
    build_property_model,
    conditional_property_given_item,
    item_prior_from_properties,
    latent_clone,
    revise_joint_prior,
    soft_question_cpt,
)
from .service import create_app

__version__ = "0.1.0"

__all__ = [
    "AnswerSourceError",
    "CatalogError",
    "CatalogModel",
    "ConversationState",
    "ConvrecError",
    "DirichletParams",
    "ElicitationError",
    "EngineModel",
    "EnumerationCapError",
    "InferenceError",
    "Observation",
    "ObservationError",
    "PropertyModel",
    "ReplayMetrics",
    "SessionRecord",
    "Stop",
    "StoppingConfig",
    "ThresholdSweep",
    "Transcript",
    "backend_name",
    "brute_force_oracle",
    "build_property_model",
    "catalog_to_dict",
    "combine_questions",
    "compile_model",
    "conditional_entropy",
    "conditional_property_given_item",
    "create_app",
    "elicit_ujs",
    "elicit_ups",
    "emit_report",
    "exact_sequential_posterior",
    "fraction_items_retained",
    "generate_synthetic_catalog",
    "generate_synthetic_log",
    "init_session",
    "item_prior_from_properties",
    "latent_clone",
    "learn_tables",
    "learned_tables_document",
    "load_catalog",
    "next_question",
    "normalized_entropy",
    "observations_from_log",
    "posterior_mean_cpt",
    "posterior_property_inference",
    "prior_to_pseudocounts",
    "ranked_items",
    "read_observation_log",
    "read_replay_log",
    "replay",
    "retained",
    "revise_joint_prior",
    "run_conversation",
    "soft_question_cpt",
    "stopping_threshold",
    "sweep_threshold",
    "update",
    "update_from_log",
    "versatility",
    "write_replay_log",
]
