"""Concurrent edits, every delivery order, one answer.

Two replicas edit the same sentence at the same time — one rewrites a
word while the other deletes around it — and the ops are then delivered
to fresh observers in *every* order-preserving interleaving. All
observers end up byte-identical. Run with::

    python3 demos/convergence_walkthrough.py
"""

import itertools

from wizundry.crdt import AFTER, BEFORE, new_doc


def interleavings(a, b):
    for picks in itertools.combinations(range(len(a) + len(b)), len(a)):
        merged, ai, bi = [], iter(a), iter(b)
        picked = set(picks)
        for slot in range(len(a) + len(b)):
            merged.append(next(ai) if slot in picked else next(bi))
        yield merged


def main():
    # a shared starting point, authored by replica 1
    base = new_doc(replica=1)
    base.local_insert(0, "we meet at noon")
    history = [op.to_dict() for op in base.op_log()]

    alice = new_doc(replica=2)
    alice.apply_remote(history)
    bob = new_doc(replica=3)
    bob.apply_remote(history)

    # concurrent, overlapping edits
    a_ops = alice.local_delete(alice.text().index("noon"), 4)
    a_ops += alice.local_insert(alice.text().index("at ") + 3, "dawn")
    b_ops = bob.local_insert(0, "tomorrow ")
    b_ops.append(bob.set_mark(bob.create_anchor(bob.text().index("meet"), BEFORE),
                              bob.create_anchor(bob.text().index("meet") + 4, AFTER),
                              "highlight", "yellow"))
    print(f"alice now sees: {alice.text()!r}")
    print(f"bob   now sees: {bob.text()!r}")

    a_wire = [op.to_dict() for op in a_ops]
    b_wire = [op.to_dict() for op in b_ops]

    results = set()
    count = 0
    for merged in interleavings(a_wire, b_wire):
        observer = new_doc(replica=9)
        observer.apply_remote(history)
        observer.apply_remote(merged)
        results.add((observer.text(),
                     tuple(sorted(str(m) for m in observer.resolve_marks()))))
        count += 1

    text, marks = next(iter(results))
    print(f"\n{count} delivery interleavings, {len(results)} distinct outcome(s)")
    print(f"converged text: {text!r}")
    print(f"converged marks: {list(marks)}")

    # and the original authors agree once they exchange ops
    alice.apply_remote(b_wire)
    bob.apply_remote(a_wire)
    assert alice.text() == bob.text() == text
    print("authors agree with every observer")


if __name__ == "__main__":
    main()
