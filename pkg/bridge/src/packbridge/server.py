"""Provider servers: TCP and stdio line loops."""

from __future__ import annotations

import socketserver
import sys

from .protocol import handle_line, render


def make_tcp_server(host: str, port: int, provider) -> socketserver.ThreadingTCPServer:
    """A threading TCP server answering one response per request line.
    Pass port 0 to bind an ephemeral port (server_address holds it)."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace").strip()
                if not line:
                    continue
                self.wfile.write(render(handle_line(line, provider)))
                self.wfile.flush()

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server((host, port), Handler)


def serve_stdio(provider, stdin=None, stdout=None) -> None:
    """Blocking request loop over text streams (stdio transport)."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        stdout.write(render(handle_line(line, provider)).decode("utf-8"))
        stdout.flush()


def serve(endpoint: str, provider) -> None:
    """Serve forever on "HOST:PORT", or over stdio for "-" / "stdio"."""
    if endpoint in ("-", "stdio"):
        serve_stdio(provider)
        return
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must be HOST:PORT or 'stdio', got {endpoint!r}")
    with make_tcp_server(host, int(port), provider) as server:
        server.serve_forever()
