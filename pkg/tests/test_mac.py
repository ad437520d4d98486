"""MAC construction: reference vectors, chunking invariance, dual routes."""
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydra_ra.crypto import (InvalidInput, MacAlgorithm, MacState, MacSuite,
                             blake2s_keyed, blockmac, compute_mac,
                             derive_auth_key, hmac_sha256)

ALL = list(MacAlgorithm)
CIPHER_ALGS = [a for a in ALL if a.is_cipher_based]


def key_for(algorithm, seed=0):
    return random.Random(seed).randbytes(algorithm.key_size)


class TestReferenceVectors:
    def test_hmac_rfc4231_case1(self):
        tag = hmac_sha256(b"\x0b" * 20, b"Hi There")
        assert tag.hex() == ("b0344c61d8db38535ca8afceaf0bf12b"
                             "881dc200c9833da726e9376c2e32cff7")

    def test_hmac_rfc4231_case2(self):
        tag = hmac_sha256(b"Jefe", b"what do ya want for nothing?")
        assert tag.hex() == ("5bdcc146bf60754e6a042426089575c7"
                             "5a003f089d2739839dec58b964ec3843")

    def test_blake2s_keyed_kat(self):
        # Keyed KAT from the BLAKE2 reference distribution: key 00..1f.
        key = bytes(range(32))
        assert blake2s_keyed(key, b"").hex() == (
            "48a8997da407876b3d79c0d92325ad3b"
            "89cbb754d86ab71aee047ad345fd2c49")
        assert blake2s_keyed(key, bytes([0])).hex() == (
            "40d15fee7c328830166ac3f918650f80"
            "7e7e01e177258cdc0a39b11f598066f1")


class TestChunkingInvariance:
    def test_streaming_equals_one_shot_100_chunkings(self):
        rng = random.Random(42)
        message = rng.randbytes(4096)
        for algorithm in ALL:
            key = key_for(algorithm)
            whole = compute_mac(algorithm, key, message)
            for trial in range(100):
                state = MacState(algorithm, key)
                cuts = sorted(rng.sample(range(len(message) + 1),
                                         rng.randrange(0, 12)))
                prev = 0
                for cut in cuts + [len(message)]:
                    state.update(message[prev:cut])
                    prev = cut
                assert state.final() == whole, (algorithm, trial)

    @given(st.sampled_from(ALL), st.binary(max_size=300),
           st.integers(0, 299))
    def test_any_split_matches(self, algorithm, message, cut):
        cut = min(cut, len(message))
        key = key_for(algorithm, 7)
        state = MacState(algorithm, key)
        state.update(message[:cut])
        state.update(message[cut:])
        assert state.final() == compute_mac(algorithm, key, message)

    def test_final_twice_rejected(self):
        state = MacState(MacAlgorithm.HMAC_SHA_256, bytes(32))
        state.final()
        with pytest.raises(InvalidInput):
            state.final()
        with pytest.raises(InvalidInput):
            state.update(b"x")


class TestCipherChainRoutes:
    """The batch chain and the per-block reference walk must always agree."""

    @given(st.binary(max_size=2000))
    @settings(max_examples=60)
    def test_speck_bulk_equals_scalar(self, message):
        key = key_for(MacAlgorithm.SPECK_64_128_CBC, 1)
        assert (blockmac.speck_cbc_final(key, message)
                == blockmac.speck_cbc_final_scalar(key, message))

    @given(st.binary(max_size=2000))
    @settings(max_examples=60)
    def test_simon_bulk_equals_scalar(self, message):
        key = key_for(MacAlgorithm.SIMON_64_128_CBC, 2)
        assert (blockmac.simon_cbc_final(key, message)
                == blockmac.simon_cbc_final_scalar(key, message))

    def test_bulk_equals_scalar_large(self):
        rng = random.Random(9)
        for size in (8191, 8192, 100_000):
            message = rng.randbytes(size)
            for final, ref in (
                    (blockmac.speck_cbc_final, blockmac.speck_cbc_final_scalar),
                    (blockmac.simon_cbc_final, blockmac.simon_cbc_final_scalar)):
                key = rng.randbytes(16)
                assert final(key, message) == ref(key, message)

    @given(st.binary(max_size=600))
    @settings(max_examples=60)
    def test_aes_chunked_equals_direct(self, message):
        from cryptography.hazmat.primitives.ciphers import (Cipher, algorithms,
                                                            modes)

        key = key_for(MacAlgorithm.AES_128_CBC, 3)
        enc = Cipher(algorithms.AES(key), modes.CBC(bytes(16))).encryptor()
        padded = (len(message).to_bytes(16, "big") + message
                  + bytes(-len(message) % 16))
        expected = (enc.update(padded) + enc.finalize())[-16:]
        assert blockmac.aes_cbc_final(key, message) == expected


class TestLengthPrefix:
    """The length prefix keeps zero-padding unambiguous."""

    def test_trailing_zeros_distinguished(self):
        for algorithm in CIPHER_ALGS:
            key = key_for(algorithm, 4)
            a = compute_mac(algorithm, key, b"abc")
            b = compute_mac(algorithm, key, b"abc\x00")
            c = compute_mac(algorithm, key, b"abc\x00\x00")
            assert len({a, b, c}) == 3, algorithm

    def test_empty_message_valid(self):
        for algorithm in ALL:
            tag = compute_mac(algorithm, key_for(algorithm, 5), b"")
            assert len(tag) == algorithm.default_tag_length


class TestTagLengths:
    def test_truncation(self):
        key = key_for(MacAlgorithm.HMAC_SHA_256, 6)
        full = compute_mac(MacAlgorithm.HMAC_SHA_256, key, b"msg")
        short = compute_mac(MacAlgorithm.HMAC_SHA_256, key, b"msg",
                            tag_length=8)
        assert short == full[:8]

    def test_cannot_extend_past_native(self):
        key = key_for(MacAlgorithm.SPECK_64_128_CBC, 6)
        with pytest.raises(InvalidInput):
            compute_mac(MacAlgorithm.SPECK_64_128_CBC, key, b"m", tag_length=32)

    def test_odd_lengths_rejected(self):
        key = key_for(MacAlgorithm.HMAC_SHA_256, 6)
        for bad in (0, 7, 9, 15, 31, 33):
            with pytest.raises(InvalidInput):
                compute_mac(MacAlgorithm.HMAC_SHA_256, key, b"m", tag_length=bad)

    def test_wrong_key_sizes_rejected(self):
        for algorithm in ALL:
            with pytest.raises(InvalidInput):
                compute_mac(algorithm, bytes(algorithm.key_size - 1), b"m")
            with pytest.raises(InvalidInput):
                compute_mac(algorithm, bytes(algorithm.key_size + 1), b"m")


class TestKeyDerivation:
    def test_deterministic_and_distinct(self):
        for algorithm in ALL:
            master = key_for(algorithm, 8)
            derived = derive_auth_key(algorithm, master)
            assert derived == derive_auth_key(algorithm, master)
            assert derived != master
            assert len(derived) == algorithm.key_size

    def test_algorithm_separates_derivation(self):
        master = bytes(range(16))
        a = derive_auth_key(MacAlgorithm.SPECK_64_128_CBC, master)
        b = derive_auth_key(MacAlgorithm.SIMON_64_128_CBC, master)
        assert a != b

    def test_suite_build_derives_when_missing(self):
        master = key_for(MacAlgorithm.SPECK_64_128_CBC, 10)
        suite = MacSuite.build(MacAlgorithm.SPECK_64_128_CBC, master)
        assert suite.auth_key == derive_auth_key(
            MacAlgorithm.SPECK_64_128_CBC, master)
        assert suite.tag_length == 16
        explicit = MacSuite.build(MacAlgorithm.SPECK_64_128_CBC, master,
                                  auth_key=bytes(16), tag_length=8)
        assert explicit.auth_key == bytes(16)
        assert explicit.tag_length == 8
