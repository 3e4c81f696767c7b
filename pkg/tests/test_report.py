import pandas as pd

from app.report import generate_pdf_report


def test_pdf_report_bytes():
    suites = {
        "helstrom": pd.DataFrame({"prior": [0.1, 0.2], "error": [0.0, 1e-13], "ok": [True, True]}),
        "classify": pd.DataFrame({"objective": ["renyi:0.6"], "found": ["convex-admissible"], "ok": [False]}),
    }
    pdf = generate_pdf_report("Verification π run", suites, {"helstrom": "PASS", "classify": "FAIL"})
    assert isinstance(pdf, bytes)
    assert pdf.startswith(b"%PDF")


def test_pdf_report_handles_empty_and_long_frames():
    suites = {
        "empty": pd.DataFrame({"ok": pd.Series([], dtype=bool)}),
        "long": pd.DataFrame({"k": range(100), "value": [0.5] * 100, "ok": [True] * 100}),
    }
    assert generate_pdf_report("Long", suites).startswith(b"%PDF")
