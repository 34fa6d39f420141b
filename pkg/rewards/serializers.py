from django.core.exceptions import ImproperlyConfigured
from rest_framework import serializers

from .shaped import ShapedRewardConfig

DEFAULTS = ShapedRewardConfig()


class ShapedRewardConfigSerializer(serializers.Serializer):
    """
    Serializer for the [reward] table; every constant can be overridden
    """
    goal = serializers.FloatField(default=DEFAULTS.goal)
    hold_ball = serializers.FloatField(default=DEFAULTS.hold_ball)
    pass_bonus = serializers.FloatField(default=DEFAULTS.pass_bonus)
    grouping_penalty = serializers.FloatField(default=DEFAULTS.grouping_penalty, max_value=0.0)
    grouping_threshold = serializers.FloatField(default=DEFAULTS.grouping_threshold, min_value=0.0)
    out_of_bounds = serializers.FloatField(default=DEFAULTS.out_of_bounds, max_value=0.0)

    def validate_goal(self, value):
        if value <= 0:
            raise serializers.ValidationError("Goal reward must be positive.")
        return value

    def create(self, validated_data):
        return ShapedRewardConfig(**validated_data)


def build_reward_config(data):
    serializer = ShapedRewardConfigSerializer(data=data or {})
    if not serializer.is_valid():
        raise ImproperlyConfigured(f'Invalid reward config: {serializer.errors}')
    return serializer.save()
