"""Simulation of hybrid dynamical systems on the quotient space.

Filippov solutions in per-edge coordinate charts, classical event-driven
executions with Zeno safeguards, and smooth eps-relaxations with an
empirical convergence harness.
"""

from .errors import (ChartSingular, DivisionDegenerate, HybridSimError,
                     LeftAllDomains, NewtonDivergence, NonUniqueContinuation,
                     NoSignChange, NotInOverlap, OnDiscontinuity, OutsideChart,
                     StepSizeUnderflow, StructuralError, TangentDegenerate,
                     TransversalityViolation)
from .model import (ControlSignal, Domain, Edge, HybridSystem, HyperplaneData,
                    InputBox, ModeField, ResetMap, ValidationConfig,
                    ValidationReport, EMPTY_INPUT, affine_reset, eval_control,
                    eval_field, guard_value, identity_reset, validate_system)
from .charts import (EdgeChart, RelaxedEdgeChart, attach_jacobian, attach_map,
                     attach_map_inverse, build_chart, build_relaxed_chart,
                     chart_transition, global_representative, local_field,
                     project_guard, pullback_field, sampled_roundtrip_error)
from .filippov import (CellKind, FilippovCell, SetDescriptor,
                       check_transversality, classify, classify_rates,
                       filippov_set, sliding_field)
from .relaxation import (TransitionFunction, TransitionKind, TransitionVariant,
                         make_transition, relaxed_bimodal_field,
                         relaxed_local_field)
from .integrate import DensePath, IntegratorConfig, integrate, locate_event
from .sim import (Event, QuotientPoint, Trajectory, canonical_point,
                  quotient_distance, simulate_execution, simulate_filippov,
                  simulate_relaxed)
from .scenarios import (SCENARIOS, Scenario, bouncing_ball, crossing_affine,
                        crossing_linear, figure8, get_scenario, load_scenario,
                        repelling_relay, sliding_relay)
from .sweep import SweepReport, SweepSpec, run_sweep, sup_distance

__version__ = "0.1.0"
