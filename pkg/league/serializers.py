from django.core.exceptions import ImproperlyConfigured
from rest_framework import serializers

from .config import LeagueConfig

DEFAULTS = LeagueConfig()


class LeagueConfigSerializer(serializers.Serializer):
    """
    Serializer for the [league] table of a run config
    """
    window_capacity = serializers.IntegerField(default=DEFAULTS.window_capacity, min_value=1)
    first_threshold = serializers.FloatField(default=DEFAULTS.first_threshold, min_value=0.0, max_value=1.0)
    final_threshold = serializers.FloatField(default=DEFAULTS.final_threshold, min_value=0.0, max_value=1.0)
    ramp_scenarios = serializers.IntegerField(default=DEFAULTS.ramp_scenarios, min_value=1)
    curriculum_scenarios = serializers.IntegerField(default=DEFAULTS.curriculum_scenarios, min_value=1)
    selfplay_threshold = serializers.FloatField(default=DEFAULTS.selfplay_threshold, min_value=0.0, max_value=1.0)
    challenge_latest_probability = serializers.FloatField(
        default=DEFAULTS.challenge_latest_probability, min_value=0.0, max_value=1.0,
    )
    pfsp_exponent = serializers.FloatField(default=DEFAULTS.pfsp_exponent, min_value=0.0)
    curriculum_step_limit = serializers.IntegerField(default=DEFAULTS.curriculum_step_limit, min_value=1)
    selfplay_step_limit = serializers.IntegerField(default=DEFAULTS.selfplay_step_limit, min_value=1)
    pool_stats_decay = serializers.FloatField(default=DEFAULTS.pool_stats_decay, min_value=0.0, max_value=1.0)
    win_rate_matches = serializers.IntegerField(default=DEFAULTS.win_rate_matches, min_value=0)

    def validate(self, attrs):
        if attrs['first_threshold'] > attrs['final_threshold']:
            raise serializers.ValidationError("Thresholds must not decrease along the curriculum.")
        if attrs['ramp_scenarios'] > attrs['curriculum_scenarios']:
            raise serializers.ValidationError({'ramp_scenarios': "Cannot exceed the number of curriculum scenarios."})
        return attrs

    def create(self, validated_data):
        return LeagueConfig(**validated_data)


def build_league_config(data):
    serializer = LeagueConfigSerializer(data=data or {})
    if not serializer.is_valid():
        raise ImproperlyConfigured(f'Invalid league config: {serializer.errors}')
    return serializer.save()
