"""The chord-level model: states are whole chord fingerings.

Notes within 30 ms of each other form a chord, and a note still sounding
when a later chord starts joins it as a sustained component that must
keep its finger.  A chord with K pitches has exactly C(5, K)
crossing-free digit assignments; transition and output scores multiply
pairwise factors over all note pairs inside and between chords, damped
by K**-zeta so big chords do not dominate.
"""

from pathlib import Path

from pianofinger import (
    ChordHmmParams,
    Hand,
    cluster_chords,
    decode_chords,
    enumerate_states,
    split_hands,
    train_chord,
)
from pianofinger.dataset import load_corpus, load_piece

ROOT = Path(__file__).resolve().parents[1]
corpus = load_corpus(ROOT / "data" / "sample_corpus")
parts = [part for piece in corpus for part in split_hands(piece) if len(part)]

params = ChordHmmParams()  # shipped exponents
model = train_chord(parts, params)

piece = load_piece(ROOT / "data" / "sample_corpus" / "102-1_fingering.txt")
rh, _ = split_hands(piece)
chords = cluster_chords(rh, params.delta)
print(f"right hand of piece 102 clusters into {len(chords)} chords:")
for chord in chords:
    tags = ["(sustained)" if c.sustained else "" for c in chord.components]
    pitches = " ".join(f"{c.midi}{t}" for c, t in zip(chord.components, tags))
    print(f"  onset {chord.onset:4.2f}s  K={chord.size}  pitches {pitches}")

print("\nstates of the first chord (digits by ascending pitch):")
for state in enumerate_states(chords[0], Hand.RH):
    print("  ", state)

result = decode_chords(model, chords, Hand.RH)
print("\ndecoded chord fingerings:")
for chord, state in zip(chords, result.states):
    print(f"  onset {chord.onset:4.2f}s  digits {state}")
print(f"log score: {result.log_score:.3f}")
