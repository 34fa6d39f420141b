from env.models import NUM_ACTIONS

from .mlp import MlpSpec
from .models import Activation

POLICY_WIDTH = 128
BONUS_WIDTH = 64
RND_OUTPUTS = 4

# Output-layer gains for orthogonal init
ACTOR_OUTPUT_GAIN = 0.01
CRITIC_OUTPUT_GAIN = 1.0


def actor_spec(obs_dim):
    return MlpSpec((obs_dim, POLICY_WIDTH, POLICY_WIDTH, POLICY_WIDTH, NUM_ACTIONS))


def critic_spec(state_dim):
    return MlpSpec((state_dim, POLICY_WIDTH, POLICY_WIDTH, POLICY_WIDTH, 1))


def ssir_spec(obs_dim):
    return MlpSpec((obs_dim, BONUS_WIDTH, NUM_ACTIONS), output_activation=Activation.TANH)


def rnd_target_spec(state_dim):
    return MlpSpec((state_dim, BONUS_WIDTH, RND_OUTPUTS))


def rnd_predictor_spec(state_dim):
    return MlpSpec((state_dim, BONUS_WIDTH, BONUS_WIDTH, BONUS_WIDTH, RND_OUTPUTS))
