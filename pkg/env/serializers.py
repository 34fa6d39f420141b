from django.core.exceptions import ImproperlyConfigured
from rest_framework import serializers

from .state import FieldConfig, ScenarioConfig


class PointField(serializers.ListField):
    child = serializers.FloatField()

    def __init__(self, **kwargs):
        kwargs.setdefault('min_length', 2)
        kwargs.setdefault('max_length', 2)
        super().__init__(**kwargs)


class FieldConfigSerializer(serializers.Serializer):
    """
    Serializer for the pitch geometry
    """
    length = serializers.FloatField(default=2.0)
    width = serializers.FloatField(default=0.84)
    goal_half_width = serializers.FloatField(default=0.1)

    def validate(self, attrs):
        if attrs['length'] <= 0 or attrs['width'] <= 0:
            raise serializers.ValidationError("Field length and width must be positive.")
        if not 0 < attrs['goal_half_width'] < attrs['width'] / 2:
            raise serializers.ValidationError({
                "goal_half_width": "Must lie between 0 and half the field width."
            })
        return attrs

    def create(self, validated_data):
        return FieldConfig(**validated_data)


class ScenarioConfigSerializer(serializers.Serializer):
    """
    Serializer for scenario files. Positions left out fall back to the
    default formation for the team size.
    """
    name = serializers.CharField(default='kickoff')
    players_per_team = serializers.IntegerField(default=4, min_value=1)
    episode_step_limit = serializers.IntegerField(default=500, min_value=1)
    terminate_on_score_or_fault = serializers.BooleanField(default=True)
    offside_enabled = serializers.BooleanField(default=False)
    opponent_strength = serializers.FloatField(default=1.0)
    home_positions = serializers.ListField(child=PointField(), required=False)
    away_positions = serializers.ListField(child=PointField(), required=False)
    seed = serializers.IntegerField(default=0)
    ball_position = PointField(default=[0.0, 0.0])
    kickoff_holder = serializers.IntegerField(required=False, allow_null=True, min_value=0)
    pitch = FieldConfigSerializer(required=False)

    def validate_opponent_strength(self, value):
        if not 0.0 < value <= 1.0:
            raise serializers.ValidationError("Strength must lie in (0, 1].")
        return value

    def validate(self, attrs):
        n = attrs['players_per_team']
        for key in ('home_positions', 'away_positions'):
            if key in attrs and len(attrs[key]) != n:
                raise serializers.ValidationError({
                    key: f"Expected {n} positions, got {len(attrs[key])}."
                })
        holder = attrs.get('kickoff_holder')
        if holder is not None and holder >= n:
            raise serializers.ValidationError({
                "kickoff_holder": "Not a valid home player index."
            })
        return attrs

    def create(self, validated_data):
        pitch = validated_data.pop('pitch', None)
        pitch = FieldConfig(**pitch) if pitch else FieldConfig()
        for key in ('home_positions', 'away_positions'):
            if key in validated_data:
                validated_data[key] = tuple(tuple(p) for p in validated_data[key])
        validated_data['ball_position'] = tuple(validated_data['ball_position'])
        return ScenarioConfig(pitch=pitch, **validated_data)


def build_scenario(data):
    """Validate a scenario mapping, raising ImproperlyConfigured on bad input"""
    serializer = ScenarioConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ImproperlyConfigured(f'Invalid scenario: {serializer.errors}')
    return serializer.save()
