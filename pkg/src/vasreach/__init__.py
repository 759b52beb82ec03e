"""Reachability in vector addition systems.

The solver decides reachability by decomposing the downward closure of
the run set into finitely many perfect marked witness graph sequences,
returning a validated witness run on the reachable side.
"""

from .core import (Action, Config, EmbeddingWitness, Instance, LocalSummary,
                   OracleResult, Prerun, Vas, amalgamate, apply_action,
                   bfs_oracle, embeds, explore_local, parse_instance,
                   run_from_actions, run_from_json, run_to_json, validate_run)
from .coverability import (CertificateNotFoundError, CoverNode, PathWitness,
                           PumpWord, StateVas, bounded_component_certificate,
                           coverable, km_cover, pumpable_backward,
                           pumpable_forward)
from .diophantine import (DiophantineBudgetError, HilbertBasis,
                          NatLinearSystem, coord_max, coord_unbounded,
                          feasible, hilbert, positive_support_solution)
from .ideals import (OMEGA, Atom, DownSet, OmegaVec, PartialTransition,
                     PrerunIdealRep, Product, Single, Star, atom_leq, cu_vec,
                     is_partial_transition, omega_leq, prerun_ideal_contains,
                     product_leq, project, reduce_product, sample_prerun,
                     word_in_product)
from .klmst import (Defect, EdgeBounded, Exhausted, InBounded, Infeasible,
                    Limits, MarkedWitnessGraph, MwgSequence,
                    NotBackwardPumpable, NotForwardPumpable, OutBounded,
                    Outcome, PERFECT, Perfect, Reachable, Trace, Unreachable,
                    WitnessGraph, build_L, dec,extract_witness,
                    family_snapshots, initial_sequence, is_perfect,
                    klmst_solve, minimize_family, mwgs_from_json,
                    mwgs_to_json, run_in_sequence, sequence_ideal,
                    validate_sequence)
from .ordinal import (GraphRank, Ordinal, format_ordinal, graph_rank_cmp,
                      natural_sum, ord_cmp, ord_norm, parse_ordinal,
                      rank_graph, rank_sequence)

__version__ = "0.1.0"
