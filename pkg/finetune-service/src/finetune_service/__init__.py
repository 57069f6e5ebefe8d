"""Fine-tune and serve a seven-way emotion text classifier.

Training data arrives as the transcript CSV the benchmark harness
exports (utterance_key,split,text,emotion); the trained bundle is served
over the classify HTTP protocol (GET /v1/health, POST /v1/classify).
"""

__version__ = "0.1.0"
