"""HTTP serving of a trained bundle over the classify wire protocol.

- GET /v1/health returns {"model_id": ...}
- POST /v1/classify takes {"texts": [...]} and returns
  {"model_id": ..., "distributions": [...]} with one seven-key
  distribution per input text, in input order.

Malformed bodies get 400, batches over MAX_BATCH_TEXTS get 413. The
model is loaded once at startup and is read-only afterwards, so request
handling may be concurrent and identical requests yield identical
responses.
"""

from pathlib import Path

from fastapi import FastAPI, HTTPException, Request

from .inference import LoadedModel, load_bundle
from .labels import LABELS

MAX_BATCH_TEXTS = 256


def create_app(bundle_dir: str | Path) -> FastAPI:
    loaded: LoadedModel = load_bundle(bundle_dir)
    app = FastAPI(title="emotion classify service")

    @app.get("/v1/health")
    def health() -> dict:
        return {"model_id": loaded.model_id}

    @app.post("/v1/classify")
    async def classify(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="body is not valid JSON")
        if not isinstance(body, dict) or "texts" not in body:
            raise HTTPException(status_code=400, detail='body must be {"texts": [...]}')
        texts = body["texts"]
        if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
            raise HTTPException(status_code=400, detail="texts must be a list of strings")
        if len(texts) > MAX_BATCH_TEXTS:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(texts)} texts exceeds the maximum of {MAX_BATCH_TEXTS}",
            )
        rows = loaded.classify(texts)
        distributions = [dict(zip(LABELS, row)) for row in rows]
        return {"model_id": loaded.model_id, "distributions": distributions}

    return app
