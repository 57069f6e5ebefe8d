"""The seven emotion classes, in their fixed ordinal order.

The order is part of the wire contract: classifier heads index their
logits by it, and served distributions key on these names.
"""

LABELS = ("anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise")
LABEL_TO_INDEX = {name: index for index, name in enumerate(LABELS)}
NUM_LABELS = len(LABELS)
