"""Thin HTTP client for the service.

Without a base URL the client mounts the FastAPI app in-process through an
ASGI transport, so the CLI works standalone; with ``base_url`` it talks to
a remote `fracisaacs serve` instance.  Service-side package errors come
back as HTTP 422 with the exception class name and are re-raised as the
same class here.
"""

from __future__ import annotations

import asyncio

import httpx

from . import errors


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous bridge to the ASGI app.

    Each request runs on its own short-lived event loop; request and
    response bodies are buffered in memory, which matches the JSON payloads
    this service exchanges.
    """

    def __init__(self, app):
        self._transport = httpx.ASGITransport(app=app, raise_app_exceptions=False)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def call():
            response = await self._transport.handle_async_request(request)
            await response.aread()
            return response

        response = asyncio.run(call())
        return httpx.Response(
            status_code=response.status_code,
            headers=response.headers,
            content=response.content,
            request=request,
        )

    def close(self):
        asyncio.run(self._transport.aclose())


class ServiceClient:
    def __init__(self, base_url: str | None = None, timeout: float = 600.0):
        if base_url:
            self._client = httpx.Client(base_url=base_url, timeout=timeout)
        else:
            from .service import create_app

            self._client = httpx.Client(
                transport=_InProcessTransport(create_app()),
                base_url="http://fracisaacs.local",
                timeout=timeout,
            )

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code >= 400:
            try:
                body = resp.json()
            except ValueError:
                body = {}
            if "error" in body:
                cls = getattr(errors, body["error"], errors.FracIsaacsError)
                raise cls(body.get("message", "service error"))
            raise errors.FracIsaacsError(
                f"service returned {resp.status_code}: {resp.text[:500]}"
            )
        return resp.json()

    def health(self) -> dict:
        resp = self._client.get("/health")
        resp.raise_for_status()
        return resp.json()

    def validate(self, spec: dict) -> dict:
        return self._post("/validate", {"spec": spec})

    def solve(self, spec: dict, tolerance=1e-8, max_iters=50_000, cfl_safety=0.9) -> dict:
        return self._post(
            "/solve",
            {
                "spec": spec,
                "tolerance": tolerance,
                "max_iters": max_iters,
                "cfl_safety": cfl_safety,
            },
        )

    def fraclap_check(self, **kwargs) -> dict:
        return self._post("/fraclap-check", kwargs)

    def convolve(self, geometry: dict, epsilons, values=None, function=None) -> dict:
        payload = {"geometry": geometry, "epsilons": list(epsilons)}
        if values is not None:
            payload["values"] = list(values)
        if function is not None:
            payload["function"] = function
        return self._post("/convolve", payload)

    def regularity(self, spec: dict, solution, **kwargs) -> dict:
        payload = {"spec": spec, "solution": list(solution)}
        payload.update(kwargs)
        return self._post("/regularity", payload)

    def oscillation(self, spec: dict, solution, **kwargs) -> dict:
        payload = {"spec": spec, "solution": list(solution)}
        payload.update(kwargs)
        return self._post("/oscillation", payload)

    def certify(self, K: float, K1: float, C: float, lam: float) -> dict:
        return self._post("/certify", {"K": K, "K1": K1, "C": C, "lambda": lam})
