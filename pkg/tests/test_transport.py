import socket
import threading

import pytest

from ecolang import messages as m
from ecolang.codec import ParseError, encode_frame
from ecolang.transport import ConnectionClosed, Endpoint, Listener, Transcript, dial


def free_closed_port():
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


@pytest.fixture
def listener():
    with Listener(0, host="127.0.0.1") as lst:
        yield lst


def test_round_trip_over_tcp(listener):
    client = dial(Endpoint.local(listener.port))
    server = listener.accept(timeout=2)
    msg = m.Message(1, "A", "S", m.Connect("h", "127.0.0.1", 7000))
    client.send(msg)
    assert server.receive(timeout=2) == msg
    reply = m.Message(1, "S", "A", m.Accept(1, m.ActionResult.OK))
    server.send(reply)
    assert client.receive(timeout=2) == reply
    client.close()
    server.close()


def test_two_peers_are_independent(listener):
    a = dial(Endpoint.local(listener.port))
    sa = listener.accept(timeout=2)
    b = dial(Endpoint.local(listener.port))
    sb = listener.accept(timeout=2)
    a.send(m.Message(1, "A", "S", m.Run()))
    b.send(m.Message(1, "B", "S", m.Stop()))
    assert sa.receive(timeout=2).sender == "A"
    assert sb.receive(timeout=2).sender == "B"
    for c in (a, b, sa, sb):
        c.close()


def test_port_in_use(listener):
    with pytest.raises(OSError):
        Listener(listener.port, host="127.0.0.1")


def test_dial_closed_port_refused():
    with pytest.raises(OSError):
        dial(Endpoint.local(free_closed_port()), timeout=2)


def test_endpoint_port_range():
    with pytest.raises(ValueError):
        Endpoint("h", "127.0.0.1", 70000)


def test_two_frames_in_one_segment(listener):
    raw = socket.create_connection(("127.0.0.1", listener.port))
    server = listener.accept(timeout=2)
    raw.sendall(encode_frame(m.Message(1, "A", "S", m.Run())) + encode_frame(m.Message(2, "A", "S", m.Stop())))
    assert server.receive(timeout=2).content == m.Run()
    assert server.receive(timeout=2).content == m.Stop()
    raw.close()


def test_frame_split_across_segments(listener):
    raw = socket.create_connection(("127.0.0.1", listener.port))
    server = listener.accept(timeout=2)
    data = encode_frame(m.Message(1, "A", "S", m.Run()))
    raw.sendall(data[:5])
    with pytest.raises(TimeoutError):
        server.receive(timeout=0.1)
    raw.sendall(data[5:])
    assert server.receive(timeout=2).content == m.Run()
    raw.close()


def test_partial_tail_discarded_on_close(listener):
    raw = socket.create_connection(("127.0.0.1", listener.port))
    server = listener.accept(timeout=2)
    raw.sendall(encode_frame(m.Message(1, "A", "S", m.Run())) + b"message (2 A S st")
    raw.close()
    assert server.receive(timeout=2).content == m.Run()
    with pytest.raises(ConnectionClosed):
        server.receive(timeout=2)


def test_garbage_line_delivered_as_error(listener):
    raw = socket.create_connection(("127.0.0.1", listener.port))
    server = listener.accept(timeout=2)
    raw.sendall(b"hello\n" + encode_frame(m.Message(1, "A", "S", m.Run())))
    assert isinstance(server.receive(timeout=2), ParseError)
    assert server.receive(timeout=2).content == m.Run()
    raw.close()


def test_concurrent_sends_keep_frames_whole(listener):
    client = dial(Endpoint.local(listener.port))
    server = listener.accept(timeout=2)
    names = [f"region{i}" for i in range(40)]
    per_thread = 50

    def blast(t):
        for i in range(per_thread):
            client.send(m.Message(1 + i, f"T{t}", "S", m.Delete(tuple(names))))

    threads = [threading.Thread(target=blast, args=(t,)) for t in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    got = [server.receive(timeout=5) for _ in range(8 * per_thread)]
    assert all(isinstance(g, m.Message) for g in got)
    for t in range(8):
        assert [g.id for g in got if g.sender == f"T{t}"] == list(range(1, per_thread + 1))
    client.close()
    server.close()


def test_transcript_records_both_directions(listener):
    log = Transcript()
    client = dial(Endpoint.local(listener.port), transcript=log)
    server = listener.accept(timeout=2)
    client.send(m.Message(1, "A", "S", m.Run()))
    server.receive(timeout=2)
    server.send(m.Message(1, "S", "A", m.ExecResult(1, m.ActionResult.OK)))
    client.receive(timeout=2)
    assert log.frames() == [
        "> message (1 A S run)",
        "< message (1 S A exec_result (1 ok))",
    ]
    direction, seconds, _rest = log.lines[0].split(" ", 2)
    assert direction == ">" and float(seconds) >= 0
    client.close()


def test_oversized_frame_closes_connection():
    with Listener(0, host="127.0.0.1", max_buffer=256) as lst:
        raw = socket.create_connection(("127.0.0.1", lst.port))
        server = lst.accept(timeout=2)
        try:
            raw.sendall(b"x" * 1024)
        except OSError:
            pass
        with pytest.raises(ConnectionClosed):
            server.receive(timeout=2)
        raw.close()


def test_send_after_close_raises(listener):
    client = dial(Endpoint.local(listener.port))
    listener.accept(timeout=2)
    client.close()
    with pytest.raises(ConnectionClosed):
        client.send(m.Message(1, "A", "S", m.Run()))
