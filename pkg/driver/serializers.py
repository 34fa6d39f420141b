from django.core.exceptions import ImproperlyConfigured
from rest_framework import serializers

from evaluation.serializers import EvalConfigSerializer
from league.serializers import LeagueConfigSerializer
from policy.serializers import TrainConfigSerializer
from rewards.models import RewardVariant
from rewards.serializers import ShapedRewardConfigSerializer
from rollout.serializers import WorkerConfigSerializer

from .config import RunConfig

DEFAULTS = RunConfig()

TABLES = {
    'workers': WorkerConfigSerializer,
    'train': TrainConfigSerializer,
    'reward': ShapedRewardConfigSerializer,
    'league': LeagueConfigSerializer,
    'evaluation': EvalConfigSerializer,
}


class RunTableSerializer(serializers.Serializer):
    """
    Serializer for the [run] table of a run config
    """
    name = serializers.CharField(default=DEFAULTS.name, max_length=100)
    seed = serializers.IntegerField(default=DEFAULTS.seed, min_value=0)
    env_step_budget = serializers.IntegerField(default=DEFAULTS.env_step_budget, min_value=0)
    players_per_team = serializers.IntegerField(default=DEFAULTS.players_per_team, min_value=1, max_value=11)
    variant = serializers.ChoiceField(choices=RewardVariant.choices, default=DEFAULTS.variant)
    output_dir = serializers.CharField(default=DEFAULTS.output_dir)
    checkpoint_every = serializers.IntegerField(default=DEFAULTS.checkpoint_every, min_value=1)

    def validate_name(self, value):
        if '/' in value or value in ('.', '..'):
            raise serializers.ValidationError("Run name must be a plain directory name.")
        return value


class RunConfigSerializer(serializers.Serializer):
    """
    Serializer for a whole run config file. Every table is optional and
    falls back to its defaults.
    """
    run = RunTableSerializer(required=False)
    workers = WorkerConfigSerializer(required=False)
    train = TrainConfigSerializer(required=False)
    reward = ShapedRewardConfigSerializer(required=False)
    league = LeagueConfigSerializer(required=False)
    evaluation = EvalConfigSerializer(required=False)

    def to_internal_value(self, data):
        if not isinstance(data, dict):
            raise serializers.ValidationError({'non_field_errors': ["Expected a table of tables."]})
        data = dict(data)
        for name in ('run', *TABLES):
            data.setdefault(name, {})
        return super().to_internal_value(data)

    def create(self, validated_data):
        tables = {name: self.fields[name].create(dict(validated_data[name])) for name in TABLES}
        return RunConfig(**validated_data['run'], **tables)


def build_run_config(data):
    serializer = RunConfigSerializer(data=data or {})
    if not serializer.is_valid():
        raise ImproperlyConfigured(f'Invalid run config: {serializer.errors}')
    return serializer.save()
