from django.core.exceptions import ImproperlyConfigured
from rest_framework import serializers

from .config import EvalConfig

DEFAULTS = EvalConfig()


class EvalConfigSerializer(serializers.Serializer):
    """
    Serializer for the [evaluation] table of a run config
    """
    matches = serializers.IntegerField(default=DEFAULTS.matches, min_value=1)
    group_seeds = serializers.ListField(
        child=serializers.IntegerField(min_value=0), default=list(DEFAULTS.group_seeds), allow_empty=False,
    )
    opponent_strength = serializers.FloatField(default=DEFAULTS.opponent_strength)
    match_step_limit = serializers.IntegerField(default=DEFAULTS.match_step_limit, min_value=1)

    def validate_opponent_strength(self, value):
        if not 0.0 < value <= 1.0:
            raise serializers.ValidationError("Opponent strength must lie in (0, 1].")
        return value

    def create(self, validated_data):
        validated_data['group_seeds'] = tuple(validated_data['group_seeds'])
        return EvalConfig(**validated_data)


def build_eval_config(data):
    serializer = EvalConfigSerializer(data=data or {})
    if not serializer.is_valid():
        raise ImproperlyConfigured(f'Invalid evaluation config: {serializer.errors}')
    return serializer.save()
