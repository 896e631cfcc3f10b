from pathlib import Path

import pytest

from pdspeech.corpus.manifest import (
    MANIFEST_FIELDS,
    ManifestError,
    SpeakerMeta,
    UtteranceRecord,
    load_manifest,
    records_by_language,
    unique_speakers,
    write_manifest,
)

HEADER = ",".join(MANIFEST_FIELDS)


def write_text(path, text):
    Path(path).write_text(text, encoding="utf-8")


GOOD = f"""{HEADER}
wav/es/es_PD000/a.wav,es_PD000,PD,es,vowels,M,62,33,4.5
wav/es/es_PD000/b.wav,es_PD000,PD,es,read,M,62,33,4.5
wav/es/es_HC001/a.wav,es_HC001,HC,es,vowels,F,58,,
wav/de/de_HC000/a.wav,de_HC000,HC,de,read,M,67,,
"""


class TestLoad:
    def test_parses_and_resolves_paths(self, tmp_path):
        write_text(tmp_path / "m.csv", GOOD)
        records = load_manifest(tmp_path / "m.csv")
        assert len(records) == 4
        assert records[0].path == tmp_path / "wav/es/es_PD000/a.wav"
        assert records[0].speaker.label == "PD"
        assert records[0].speaker.updrs3 == 33
        assert records[2].speaker.updrs3 is None

    def test_same_speaker_shares_meta_object(self, tmp_path):
        write_text(tmp_path / "m.csv", GOOD)
        records = load_manifest(tmp_path / "m.csv")
        assert records[0].speaker is records[1].speaker

    def test_unique_speakers_order(self, tmp_path):
        write_text(tmp_path / "m.csv", GOOD)
        speakers = unique_speakers(load_manifest(tmp_path / "m.csv"))
        assert [s.speaker_id for s in speakers] == ["es_PD000", "es_HC001", "de_HC000"]

    def test_records_by_language(self, tmp_path):
        write_text(tmp_path / "m.csv", GOOD)
        by_lang = records_by_language(load_manifest(tmp_path / "m.csv"))
        assert sorted(by_lang) == ["de", "es"]
        assert len(by_lang["es"]) == 3

    def test_absolute_paths_kept(self, tmp_path):
        write_text(
            tmp_path / "m.csv",
            f"{HEADER}\n/data/x.wav,s1,HC,es,read,M,50,,\n",
        )
        records = load_manifest(tmp_path / "m.csv")
        assert records[0].path == Path("/data/x.wav")


class TestRejects:
    def _expect_error(self, tmp_path, body, match):
        write_text(tmp_path / "m.csv", body)
        with pytest.raises(ManifestError, match=match):
            load_manifest(tmp_path / "m.csv")

    def test_bad_header(self, tmp_path):
        self._expect_error(tmp_path, "path,speaker\nx,y\n", "bad header")

    def test_missing_field(self, tmp_path):
        self._expect_error(
            tmp_path, f"{HEADER}\nx.wav,s1,PD,es,read,M,62,33\n", "line 2.*expected 9"
        )

    def test_unknown_label(self, tmp_path):
        self._expect_error(
            tmp_path, f"{HEADER}\nx.wav,s1,pd,es,read,M,62,,\n", "line 2.*label"
        )

    def test_bad_age(self, tmp_path):
        self._expect_error(
            tmp_path, f"{HEADER}\nx.wav,s1,HC,es,read,M,old,,\n", "line 2.*age"
        )

    def test_clinical_fields_on_hc(self, tmp_path):
        self._expect_error(
            tmp_path, f"{HEADER}\nx.wav,s1,HC,es,read,M,62,33,\n", "only legal for PD"
        )

    def test_speaker_conflict(self, tmp_path):
        body = (
            f"{HEADER}\n"
            "a.wav,s1,PD,es,read,M,62,33,4.5\n"
            "b.wav,s1,PD,es,read,M,63,33,4.5\n"
        )
        self._expect_error(tmp_path, body, "line 3.*disagrees")

    def test_empty_file(self, tmp_path):
        self._expect_error(tmp_path, "", "empty manifest")

    def test_header_only(self, tmp_path):
        self._expect_error(tmp_path, f"{HEADER}\n", "no rows")


class TestRoundTrip:
    def test_write_then_load_identity(self, tmp_path):
        meta = SpeakerMeta("s1", "PD", "es", "F", 61, 28, 3.5)
        meta2 = SpeakerMeta("s2", "HC", "es", "M", 55)
        records = [
            UtteranceRecord(path=tmp_path / "a.wav", speaker=meta, task="read"),
            UtteranceRecord(path=tmp_path / "b.wav", speaker=meta, task="vowels"),
            UtteranceRecord(path=tmp_path / "c.wav", speaker=meta2, task="read"),
        ]
        write_manifest(records, tmp_path / "m.csv")
        assert load_manifest(tmp_path / "m.csv") == records

    def test_relative_write(self, tmp_path):
        meta = SpeakerMeta("s1", "HC", "de", "M", 50)
        records = [UtteranceRecord(path=tmp_path / "wav" / "a.wav", speaker=meta, task="read")]
        write_manifest(records, tmp_path / "m.csv", relative_to=tmp_path)
        text = (tmp_path / "m.csv").read_text()
        assert "wav/a.wav" in text
        assert load_manifest(tmp_path / "m.csv") == records
