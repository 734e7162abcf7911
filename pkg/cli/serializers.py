import math

from django.conf import settings
from rest_framework import serializers

from game_engine.domain import Ordering, StrategyKind
from qmatrix import services as qm
from qmatrix.exceptions import DimensionError, ValidationError
from qmatrix.serializers import MatrixLiteralField

from .domain import MODEL_DIMENSIONS, MODELS, GameDefinition


def _reject_unknown_keys(serializer, data):
    if not isinstance(data, dict):
        return
    unknown = sorted(set(data) - set(serializer.fields))
    if unknown:
        raise serializers.ValidationError({key: ['Unknown key.'] for key in unknown})


class StrategySpaceSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=[kind.value for kind in StrategyKind])
    lo = serializers.FloatField(required=False)
    hi = serializers.FloatField(required=False)
    members = serializers.ListField(child=MatrixLiteralField(), required=False)
    target = serializers.IntegerField(required=False, min_value=0)

    def to_internal_value(self, data):
        _reject_unknown_keys(self, data)
        return super().to_internal_value(data)

    def validate(self, data):
        if data['kind'] == StrategyKind.ROTATION.value:
            if data.get('lo', 0.0) > data.get('hi', math.pi / 2):
                raise serializers.ValidationError('Rotation interval has lo > hi.')
        elif 'lo' in data or 'hi' in data:
            raise serializers.ValidationError('lo/hi apply to rotation strategies only.')
        if data['kind'] == StrategyKind.FINITE.value:
            if not data.get('members'):
                raise serializers.ValidationError('Finite strategy sets need members.')
            for index, member in enumerate(data['members']):
                if not qm.is_unitary(member):
                    raise serializers.ValidationError(f"Member {index} is not unitary.")
        elif 'members' in data:
            raise serializers.ValidationError('members apply to finite strategy sets only.')
        return data


class GameDefinitionSerializer(serializers.Serializer):
    """Validates a parsed definition document into a GameDefinition."""

    model = serializers.ChoiceField(choices=MODELS)
    p = serializers.FloatField(required=False, min_value=0.0, max_value=1.0)
    P1 = MatrixLiteralField()
    P2 = MatrixLiteralField()
    seed = serializers.IntegerField(required=False)
    tolerances = serializers.DictField(child=serializers.FloatField(), required=False)
    dimension = serializers.IntegerField(required=False, min_value=1)
    initial_state = MatrixLiteralField(required=False)
    players = StrategySpaceSerializer(many=True, required=False)
    ordering = serializers.ChoiceField(choices=[ordering.value for ordering in Ordering], required=False)

    def to_internal_value(self, data):
        _reject_unknown_keys(self, data)
        return super().to_internal_value(data)

    def validate_tolerances(self, value):
        unknown = sorted(set(value) - set(settings.QUANTUM_GAMES))
        if unknown:
            raise serializers.ValidationError(f"Unknown tolerance keys: {', '.join(unknown)}")
        # integer settings (grid sizes, seeds) stay integers
        coerced = {}
        for key, number in value.items():
            if isinstance(settings.QUANTUM_GAMES[key], int):
                if not float(number).is_integer():
                    raise serializers.ValidationError(f"{key} must be an integer, got {number}")
                number = int(number)
            coerced[key] = number
        return coerced

    def validate(self, data):
        model = data['model']
        if model == 'one_qubit_mixed' and 'p' not in data:
            raise serializers.ValidationError({'p': ['The mixed model needs a mixing probability.']})
        if model != 'one_qubit_mixed' and 'p' in data:
            raise serializers.ValidationError({'p': ['Only the mixed model takes p.']})

        custom_keys = ('dimension', 'initial_state', 'players', 'ordering')
        if model == 'custom':
            missing = [key for key in custom_keys[:3] if key not in data]
            if missing:
                raise serializers.ValidationError({key: ['Required for custom games.'] for key in missing})
            dimension = data['dimension']
            if len(data['players']) != 2:
                raise serializers.ValidationError({'players': ['Custom games declare exactly two players.']})
        else:
            extra = [key for key in custom_keys if key in data]
            if extra:
                raise serializers.ValidationError({key: ['Only custom games take this key.'] for key in extra})
            dimension = MODEL_DIMENSIONS[model]

        tol = data.get('tolerances', {}).get('VALIDATION_TOL')
        matrices = [('P1', data['P1']), ('P2', data['P2'])]
        if model == 'custom':
            matrices.append(('initial_state', data['initial_state']))
        for key, matrix in matrices:
            if matrix.shape != (dimension, dimension):
                raise serializers.ValidationError(
                    {key: [f"Dimension error: expected {dimension}x{dimension}, got {matrix.shape[0]}x{matrix.shape[1]}."]}
                )
            try:
                if key == 'initial_state':
                    qm.validate_density(matrix, tol)
                else:
                    qm.validate_hermitian(matrix, tol)
            except (ValidationError, DimensionError) as exc:
                raise serializers.ValidationError({key: [str(exc)]})
        return data

    def create(self, validated_data):
        players = tuple(dict(player) for player in validated_data.get('players', ()))
        return GameDefinition(
            model=validated_data['model'],
            P1=validated_data['P1'],
            P2=validated_data['P2'],
            p=validated_data.get('p'),
            seed=validated_data.get('seed'),
            tolerances=dict(validated_data.get('tolerances', {})),
            dimension=validated_data.get('dimension'),
            initial_state=validated_data.get('initial_state'),
            players=players,
            ordering=validated_data.get('ordering', Ordering.STATIC.value),
        )
