import io

import pytest

from vfrladder import tables, synthetic
from vfrladder.domain import LadderEntry, Representation, SegmentFeatures, default_config
from vfrladder.tables import FeatureRow, TableError


def test_fmt():
    assert tables.fmt(None) == ""
    assert tables.fmt(True) == "true"
    assert tables.fmt(30.0) == "30"
    assert tables.fmt(7.5) == "7.5"
    assert tables.fmt(0.1 + 0.2) == repr(0.1 + 0.2)
    assert tables.fmt("a,b") == "a,b"


def test_feature_round_trip():
    rows = [FeatureRow("clip_s000", SegmentFeatures(1 / 3, 2.5, 128.0), 29.97002997002997, 120)]
    buf = io.StringIO()
    tables.write_features(buf, rows)
    assert buf.getvalue().splitlines()[0] == "segment_id,E,h,L,fps,frames"
    assert tables.read_features(io.StringIO(buf.getvalue())) == rows


def test_records_round_trip_with_optional_columns(tmp_path):
    recs = synthetic.generate_dataset(synthetic.SurfaceParams(), 1, default_config(), seed=0)[:20]
    p = tmp_path / "r.csv"
    tables.write_records(p, recs)
    assert p.read_text().splitlines()[0] == ",".join(tables.RECORD_COLUMNS)
    back = tables.read_records(p)
    assert back == recs
    assert back[0].measured_psnr is None


def test_ladder_round_trip_and_grouping():
    rep = Representation(360, 365_000)
    ladders = [("a", [LadderEntry(rep, 15.0, 3, 61.25, 40.0)]),
               ("b", [LadderEntry(rep, 30.0, 0, 70.0, 20.0, infeasible=True),
                      LadderEntry(Representation(720, 3_000_000), 30.0, 0, 90.0, 31.0)])]
    buf = io.StringIO()
    tables.write_ladders(buf, ladders)
    assert tables.read_ladders(io.StringIO(buf.getvalue())) == ladders
    recs = tables.read_records(io.StringIO(buf.getvalue()))
    assert [r.measured_vmaf for r in recs] == [61.25, 70.0, 90.0]


def test_errors_carry_line_numbers():
    text = "segment_id,E,h,L,fps,frames\na,1,2,3,30,120\nb,x,2,3,30,120\n"
    with pytest.raises(TableError, match="<stream>:3"):
        tables.read_features(io.StringIO(text))
    with pytest.raises(TableError, match="missing columns"):
        tables.read_features(io.StringIO("segment_id,E\n"))
    with pytest.raises(TableError, match="missing columns"):
        tables.read_records(io.StringIO("segment_id,height\nx,3\n"))
