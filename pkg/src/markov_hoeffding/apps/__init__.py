"""Application experiments: ERM, averaged SGD, UCB-M bandits."""
from .bandit import BanditConfig, RegretTrace, regret_bound_check, regret_rhs, ucb_m_batch, ucb_m_run
from .erm import ErmProblem, erm_experiment, generalization_slack
from .sgd import SgdConfig, sample_complexity, sgd_chain_experiment
