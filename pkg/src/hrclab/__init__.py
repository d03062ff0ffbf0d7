"""Human-robot cooperation training lab.

Slider-pendulum-ball balance task, hierarchical-reward DQN, six staged
curricula against scripted or live human partners, and result reporting.
"""

from .config import ConvergenceCriterion, ExperimentConfig
from .curriculum import (CaseMetrics, CaseRunResult, TrainingCase, StageConfig,
                         build_case, convergence_check, evaluate_policy, run_case,
                         run_episode, run_stage, three_factor_summary)
from .dqn import (ActionSet, AgentConfig, DQNAgent, QNetwork, ReplayBuffer,
                  Transition, load_weights, save_weights, select_action, td_target)
from .errors import ConfigError, ProtocolError, SimulationFault, WeightFormatError
from .partners import (PartnerSpec, SkillProfile, SurrogatePartner, SKILL_PROFILES,
                       human_reward, make_surrogate, partner_action)
from .physics import (ControlInput, EnvState, InitRanges, Observation, PhysicsParams,
                      load_physics_config, observe, reset, step, write_trajectory_csv)
from .reporting import export_metrics, load_metrics_csv, write_metrics_csv
from .rewards import (DecompositionTree, RewardParams, RoleAssignment, TaskNode,
                      build_slider_pendulum_tree, load_tree, save_tree,
                      subtask_reward, total_reward, validate_tree)

__version__ = "0.1.0"
