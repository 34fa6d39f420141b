from django.core.exceptions import ImproperlyConfigured
from rest_framework import serializers

from .config import TrainConfig

DEFAULTS = TrainConfig()


class TrainConfigSerializer(serializers.Serializer):
    """
    Serializer for the [train] table of a run config
    """
    gamma = serializers.FloatField(default=DEFAULTS.gamma, min_value=0.0, max_value=1.0)
    gae_lambda = serializers.FloatField(default=DEFAULTS.gae_lambda, min_value=0.0, max_value=1.0)
    clip_epsilon = serializers.FloatField(default=DEFAULTS.clip_epsilon)
    entropy_coef = serializers.FloatField(default=DEFAULTS.entropy_coef, min_value=0.0)
    lr_actor = serializers.FloatField(default=DEFAULTS.lr_actor)
    lr_critic = serializers.FloatField(default=DEFAULTS.lr_critic)
    minibatch_size = serializers.IntegerField(default=DEFAULTS.minibatch_size, min_value=1)
    epochs_per_rollout = serializers.IntegerField(default=DEFAULTS.epochs_per_rollout, min_value=1)
    max_grad_norm = serializers.FloatField(default=DEFAULTS.max_grad_norm)
    ssir_alpha = serializers.FloatField(default=DEFAULTS.ssir_alpha, min_value=0.0)
    lr_ssir = serializers.FloatField(default=DEFAULTS.lr_ssir)
    lr_rnd = serializers.FloatField(default=DEFAULTS.lr_rnd)
    warmup_rollouts = serializers.IntegerField(default=DEFAULTS.warmup_rollouts, min_value=0)
    pe_dim = serializers.IntegerField(default=DEFAULTS.pe_dim, min_value=2)

    def validate_clip_epsilon(self, value):
        if value <= 0:
            raise serializers.ValidationError("Clip range must be positive.")
        return value

    def validate_pe_dim(self, value):
        if value % 2:
            raise serializers.ValidationError("Positional encoding width must be even.")
        return value

    def validate(self, attrs):
        for key in ('lr_actor', 'lr_critic', 'lr_ssir', 'lr_rnd', 'max_grad_norm'):
            if attrs[key] <= 0:
                raise serializers.ValidationError({key: "Must be positive."})
        return attrs

    def create(self, validated_data):
        return TrainConfig(**validated_data)


def build_train_config(data):
    serializer = TrainConfigSerializer(data=data or {})
    if not serializer.is_valid():
        raise ImproperlyConfigured(f'Invalid train config: {serializer.errors}')
    return serializer.save()
