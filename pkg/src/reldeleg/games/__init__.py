from .core import GameConfig, MalformedAnswer, Transcript, default_t
from .energy import (EmbeddingExhausted, EnergyTest, HamiltonianTest, NoEmbedding, WrappedGame,
                     audit_transcript, derive_d, embed_positions, energy_test_round,
                     hamiltonian_test_round, omega_h, wrapped_game_round)
from .engine import Estimate, NotAnalyzable, estimate_acceptance, exact_acceptance, exact_breakdown
from .magic_square import MagicSquareGame, classical_value, magic_square_round
from .pbt import PauliBraidingTest, pbt_round

__all__ = [
    "GameConfig", "MalformedAnswer", "Transcript", "default_t",
    "EmbeddingExhausted", "EnergyTest", "HamiltonianTest", "NoEmbedding", "WrappedGame",
    "audit_transcript", "derive_d", "embed_positions", "energy_test_round",
    "hamiltonian_test_round", "omega_h", "wrapped_game_round",
    "Estimate", "NotAnalyzable", "estimate_acceptance", "exact_acceptance", "exact_breakdown",
    "MagicSquareGame", "classical_value", "magic_square_round",
    "PauliBraidingTest", "pbt_round",
]
