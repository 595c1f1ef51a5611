"""Naive term-rewriting oracle for the SCAN semantics.

Works rule-by-rule on the token string, with no parse tree: primitives
rewrite to actions first, then directional modifiers, then repetitions over
maximal action runs, and finally the single conjunction.  Kept independent
of compgen.scan so the two implementations can cross-check each other.
"""

ACTIONS = {"JUMP", "WALK", "RUN", "LOOK", "LTURN", "RTURN"}
PRIM = {"walk": "WALK", "look": "LOOK", "run": "RUN", "jump": "JUMP"}
TURN = {"left": "LTURN", "right": "RTURN"}
REPEAT = {"twice": 2, "thrice": 3}


def _step(tokens):
    # 1. bare primitives
    for i, t in enumerate(tokens):
        if t in PRIM:
            return tokens[:i] + [PRIM[t]] + tokens[i + 1:]
    # 2. turn with a modifier
    for i in range(len(tokens) - 2):
        if tokens[i] == "turn" and tokens[i + 2] in TURN:
            turn = TURN[tokens[i + 2]]
            if tokens[i + 1] == "opposite":
                return tokens[:i] + [turn, turn] + tokens[i + 3:]
            if tokens[i + 1] == "around":
                return tokens[:i] + [turn] * 4 + tokens[i + 3:]
    # 3. bare directed turn
    for i in range(len(tokens) - 1):
        if tokens[i] == "turn" and tokens[i + 1] in TURN:
            return tokens[:i] + [TURN[tokens[i + 1]]] + tokens[i + 2:]
    # 4. action with a modifier
    for i in range(len(tokens) - 2):
        a, mod, d = tokens[i:i + 3]
        if a in ACTIONS and d in TURN:
            if mod == "opposite":
                return tokens[:i] + [TURN[d], TURN[d], a] + tokens[i + 3:]
            if mod == "around":
                return tokens[:i] + [TURN[d], a] * 4 + tokens[i + 3:]
    # 5. directed action
    for i in range(len(tokens) - 1):
        if tokens[i] in ACTIONS and tokens[i + 1] in TURN:
            return tokens[:i] + [TURN[tokens[i + 1]], tokens[i]] + tokens[i + 2:]
    # 6. repetition over the maximal action run directly before the word
    for i, t in enumerate(tokens):
        if t in REPEAT:
            j = i
            while j > 0 and tokens[j - 1] in ACTIONS:
                j -= 1
            if j < i:
                run = tokens[j:i]
                return tokens[:j] + run * REPEAT[t] + tokens[i + 1:]
    # 7. conjunction, once both sides are pure action sequences
    for i, t in enumerate(tokens):
        if t in ("and", "after"):
            left, right = tokens[:i], tokens[i + 1:]
            if all(x in ACTIONS for x in left + right):
                return left + right if t == "and" else right + left
    return None


def rewrite(command):
    """Rewrite a SCAN command string to its action sequence."""
    tokens = command.split() if isinstance(command, str) else list(command)
    while True:
        step = _step(tokens)
        if step is None:
            break
        tokens = step
    if not all(t in ACTIONS for t in tokens):
        raise ValueError(f"oracle stuck on {' '.join(tokens)!r}")
    return tuple(tokens)
