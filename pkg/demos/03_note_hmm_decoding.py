"""Training a note-level HMM and decoding a fingering.

Finger digits are the hidden states; the model learns digit transition
statistics (an interpolated m-gram) and, per hand and lag, how likely
each keyboard displacement is under each finger pair.  Decoding is exact
Viterbi with an optional hard rule against finger crossings inside
chords.
"""

from pathlib import Path

from pianofinger import (
    Hand,
    NoteHmmConfig,
    Symmetry,
    decode_viterbi,
    parse_fingering_file,
    split_hands,
    train,
    transition_prob,
)
from pianofinger.dataset import load_corpus

CORPUS_DIR = Path(__file__).resolve().parents[1] / "data" / "sample_corpus"

corpus = load_corpus(CORPUS_DIR)
parts = [part for piece in corpus for part in split_hands(piece) if len(part)]
print(f"training on {len(corpus)} pieces / {sum(len(p) for p in corpus)} notes")

config = NoteHmmConfig(order=2)  # lattice pitches, shipped coefficients
model = train(parts, config)

print("\na few learned digit transitions P(next | 1, 2):")
for digit in range(1, 6):
    print(f"  -> {digit}: {transition_prob(model, (1, 2), digit):.3f}")

# Decode a C major scale the model has never seen at this tempo.
scale = "\n".join(
    f"{i} {i * 0.2:.6f} {i * 0.2 + 0.18:.6f} {p} 70 64 0"
    for i, p in enumerate(["C4", "D4", "E4", "F4", "G4", "A4", "B4", "C5"])
)
piece = parse_fingering_file(scale, piece_id="scale")
result = decode_viterbi(model, piece, hand=Hand.RH)
print("\nC major scale, right hand:")
print("  pitches:", [n.pitch for n in piece.notes])
print("  fingers:", list(result.fingers))
print(f"  log score: {result.log_score:.3f}")
print("  (the bundled corpus is tiny; it already learned the thumb-under")
print("   1-2-3 cycle, while the textbook 4-5 close at the top needs more data)")

# A chord decodes to distinct, pitch-ordered digits because of the
# within-chord crossing rule.
chord = parse_fingering_file(
    "0 0.0 0.5 C4 70 64 0\n1 0.0 0.5 E4 70 64 0\n2 0.0 0.5 G4 70 64 0\n"
)
print("\nC major triad fingers:", list(decode_viterbi(model, chord, hand=Hand.RH).fingers))

# Tie the left hand to the mirrored right hand and retrain: handy when
# data is scarce.
tied = train(parts, NoteHmmConfig(order=2, symmetries={Symmetry.REFLECTION}))
lh_scale = parse_fingering_file(
    "\n".join(
        f"{i} {i * 0.2:.6f} {i * 0.2 + 0.18:.6f} {p} 70 64 1"
        for i, p in enumerate(["C3", "B2", "A2", "G2", "F2", "E2", "D2", "C2"])
    )
)
print("\nleft-hand descending scale with the reflection-tied model:")
print("  fingers:", list(decode_viterbi(tied, lh_scale, hand=Hand.LH).fingers))
