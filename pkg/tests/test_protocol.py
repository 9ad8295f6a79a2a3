import random
import time

import pytest

from ismscan import profiles, protocol
from ismscan.errors import (
    FrameShapeError,
    FrameValueError,
    ParseError,
    ProtocolError,
    UnknownProfileError,
)

from .mocks import MockScannerTransport, ScriptedTransport, SilentTransport

CYWUSB = profiles.profile_by_id("cywusb6935")


class TestLptParsing:
    def test_golden_dump(self, lpt_dump_text):
        values = protocol.parse_lpt_frame(lpt_dump_text)
        assert len(values) == 84
        assert max(values) == 31
        assert values.index(31) == 13
        assert values[61] == 5  # verified against the source dump
        assert values[12:16] == [4, 31, 30, 29]

    def test_golden_dump_validates_against_cywusb(self, lpt_dump_text):
        values = protocol.parse_lpt_frame(lpt_dump_text)
        frame = protocol.frame_from_raw(CYWUSB, values, seq=0, t_ms=0)
        assert len(frame.raw) == CYWUSB.channel_count == 84

    def test_single_element_trailing_comma(self):
        assert protocol.parse_lpt_frame("frame: [7,]") == [7]

    def test_whitespace_and_newlines_inside_list(self):
        assert protocol.parse_lpt_frame("frame: [ 1 ,\n  2,\t3 ]") == [1, 2, 3]

    def test_non_integer_token_offset(self):
        text = "frame: [1,x,3]"
        with pytest.raises(ParseError) as excinfo:
            protocol.parse_lpt_frame(text)
        assert excinfo.value.offset == text.index("x")

    def test_missing_bracket(self):
        with pytest.raises(ParseError, match="expected '\\['"):
            protocol.parse_lpt_frame("frame: 1,2,3")

    def test_empty_list(self):
        with pytest.raises(ParseError, match="empty"):
            protocol.parse_lpt_frame("frame: []")

    def test_unterminated_list(self):
        with pytest.raises(ParseError, match="unterminated"):
            protocol.parse_lpt_frame("frame: [1,2,3")

    def test_no_marker(self):
        with pytest.raises(ParseError) as excinfo:
            protocol.parse_lpt_frame("[1,2,3]")
        assert excinfo.value.offset == 0

    def test_every_parse_error_carries_offset(self):
        for text in ("frame: 1", "frame: []", "frame: [1,,2]", "frame: [1"):
            with pytest.raises(ParseError) as excinfo:
                protocol.parse_lpt_frame(text)
            assert isinstance(excinfo.value.offset, int)
            assert 0 <= excinfo.value.offset <= len(text)

    def test_multiple_blocks(self):
        text = "junk frame: [1,2] more junk\nframe: [3,\n4,]"
        assert list(protocol.iter_lpt_frames(text)) == [[1, 2], [3, 4]]


class TestFrameValidation:
    def test_wrong_length(self):
        with pytest.raises(FrameShapeError, match="84"):
            protocol.frame_from_raw(CYWUSB, [0] * 83, seq=0, t_ms=0)

    def test_value_above_raw_max(self):
        raw = [0] * 84
        raw[17] = 32
        with pytest.raises(FrameValueError) as excinfo:
            protocol.frame_from_raw(CYWUSB, raw, seq=0, t_ms=0)
        assert excinfo.value.index == 17

    def test_negative_value(self):
        raw = [0] * 84
        raw[5] = -1
        with pytest.raises(FrameValueError):
            protocol.frame_from_raw(CYWUSB, raw, seq=0, t_ms=0)


def _random_frame(rng: random.Random) -> protocol.SweepFrame:
    profile = rng.choice(profiles.builtin_profiles())
    raw = [rng.randint(0, profile.raw_max) for _ in range(profile.channel_count)]
    return protocol.frame_from_raw(
        profile, raw, seq=rng.randint(0, 10**6), t_ms=rng.randint(0, 10**7)
    )


class TestLineCodec:
    def test_encode_shape(self):
        frame = protocol.frame_from_raw(CYWUSB, [0] * 84, seq=3, t_ms=120)
        line = protocol.encode_frame(frame)
        assert line.startswith(b"F 3 120 cywusb6935 0,0,")
        assert line.endswith(b"\n")
        assert not line.rstrip(b"\n").endswith(b",")
        assert len(line.decode("ascii").split(" ")[4].split(",")) == 84

    def test_golden_dump_adjacency_survives_encode(self, lpt_dump_text):
        values = protocol.parse_lpt_frame(lpt_dump_text)
        frame = protocol.frame_from_raw(CYWUSB, values, seq=0, t_ms=0)
        assert b"4,31,30,29" in protocol.encode_frame(frame)

    def test_round_trip_random_frames(self):
        rng = random.Random(42)
        for _ in range(300):
            frame = _random_frame(rng)
            assert protocol.decode_frame(protocol.encode_frame(frame)) == frame

    def test_decode_accepts_str(self):
        frame = protocol.frame_from_raw(CYWUSB, [1] * 84, seq=0, t_ms=0)
        assert protocol.decode_frame(protocol.encode_frame(frame).decode()) == frame

    def test_decode_unknown_profile(self):
        with pytest.raises(UnknownProfileError):
            protocol.decode_frame(b"F 0 0 nosuch 1,2\n")

    def test_decode_truncated(self):
        with pytest.raises(ParseError):
            protocol.decode_frame(b"F 0 0\n")

    def test_decode_wrong_channel_count(self):
        with pytest.raises(FrameShapeError):
            protocol.decode_frame(b"F 0 0 cywusb6935 1,2,3\n")

    def test_decode_value_out_of_range(self):
        csv = ",".join(["0"] * 83 + ["32"])
        with pytest.raises(FrameValueError):
            protocol.decode_frame(f"F 0 0 cywusb6935 {csv}\n")

    def test_decode_negative_seq(self):
        csv = ",".join(["0"] * 84)
        with pytest.raises(ParseError):
            protocol.decode_frame(f"F -1 0 cywusb6935 {csv}\n")

    def test_decode_non_integer_raw(self):
        csv = ",".join(["0"] * 83 + ["x"])
        with pytest.raises(ParseError):
            protocol.decode_frame(f"F 0 0 cywusb6935 {csv}\n")


class TestHandshake:
    def test_conforming_device(self):
        transport = ScriptedTransport([b"ID Geoff's 2.4GHz Scanner;cywusb6935;1.0\n"])
        identity = protocol.handshake(transport, timeout_ms=50)
        assert identity is not None
        assert identity.name == "Geoff's 2.4GHz Scanner"
        assert identity.profile_id == "cywusb6935"
        assert identity.firmware == "1.0"
        assert protocol.connection_status(identity) == "Connected to Geoff's 2.4GHz Scanner"
        assert transport.requests == [b"ID?\n"]

    def test_silent_device(self):
        transport = SilentTransport()
        identity = protocol.handshake(transport, timeout_ms=20)
        assert identity is None
        assert protocol.connection_status(identity) == "Scanner not found"
        # one retry before giving up
        assert transport.requests == [b"ID?\n", b"ID?\n"]

    def test_retry_after_one_timeout(self):
        transport = ScriptedTransport([b"", b"ID Late Scanner;cc2500;2.1\n"])
        identity = protocol.handshake(transport, timeout_ms=20)
        assert identity is not None
        assert identity.name == "Late Scanner"

    def test_malformed_reply_is_protocol_error(self):
        with pytest.raises(ProtocolError):
            protocol.handshake(ScriptedTransport([b"HELLO\n"]), timeout_ms=20)

    def test_wrong_field_count_is_protocol_error(self):
        with pytest.raises(ProtocolError):
            protocol.handshake(ScriptedTransport([b"ID onlyname\n"]), timeout_ms=20)

    def test_empty_name_is_protocol_error(self):
        with pytest.raises(ProtocolError):
            protocol.handshake(ScriptedTransport([b"ID ;cywusb6935;1.0\n"]), timeout_ms=20)

    def test_terminates_quickly_on_silence(self):
        start = time.monotonic()
        protocol.handshake(SilentTransport(), timeout_ms=50)
        assert time.monotonic() - start < 1.0

    def test_mock_scanner_streams_after_handshake(self):
        frame = protocol.frame_from_raw(CYWUSB, [2] * 84, seq=0, t_ms=0)
        transport = MockScannerTransport(
            b"ID Geoff's 2.4GHz Scanner;cywusb6935;1.0\n",
            [protocol.encode_frame(frame)],
        )
        identity = protocol.handshake(transport, timeout_ms=20)
        assert identity is not None
        assert protocol.decode_frame(transport.readline(0.1)) == frame
