from django.core.exceptions import ImproperlyConfigured
from rest_framework import serializers

from .config import WorkerConfig

DEFAULTS = WorkerConfig()


class WorkerConfigSerializer(serializers.Serializer):
    """
    Serializer for the [workers] table of a run config
    """
    num_workers = serializers.IntegerField(default=DEFAULTS.num_workers, min_value=1)
    steps_per_worker = serializers.IntegerField(default=DEFAULTS.steps_per_worker, min_value=1)
    dump_replays = serializers.BooleanField(default=DEFAULTS.dump_replays)

    def create(self, validated_data):
        return WorkerConfig(**validated_data)


def build_worker_config(data):
    serializer = WorkerConfigSerializer(data=data or {})
    if not serializer.is_valid():
        raise ImproperlyConfigured(f'Invalid worker config: {serializer.errors}')
    return serializer.save()
