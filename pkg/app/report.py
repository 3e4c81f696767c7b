from fpdf import FPDF
import pandas as pd

MAX_ROWS = 40
COL_LIMIT = 6


def _latin1(text):
    # core PDF fonts are latin-1 only
    return str(text).encode("latin-1", "replace").decode("latin-1")


def _cell_text(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return _latin1(value)


class PDF(FPDF):
    def header(self):
        self.set_font('Arial', 'B', 16)
        self.cell(0, 10, 'Two-State Discrimination Verification', 0, 1, 'C')
        self.ln(5)

    def footer(self):
        self.set_y(-15)
        self.set_font('Arial', 'I', 8)
        self.cell(0, 10, f'Page {self.page_no()}', 0, 0, 'C')


def _suite_table(pdf, frame):
    """Failed rows first, then the rest, truncated to MAX_ROWS."""
    if frame.empty:
        pdf.set_font("Arial", "I", 10)
        pdf.cell(0, 8, "No cases.", ln=True)
        return

    ordered = pd.concat([frame[~frame["ok"]], frame[frame["ok"]]]) if "ok" in frame else frame
    cols = [c for c in ordered.columns if c != "ok"][:COL_LIMIT - 1] + (["ok"] if "ok" in frame else [])
    w = 190 / len(cols)

    pdf.set_font("Arial", "B", 9)
    for col in cols:
        pdf.cell(w, 7, _latin1(col), 1, 0, 'C', fill=True)
    pdf.ln()

    pdf.set_font("Arial", "", 9)
    for _, row in ordered.head(MAX_ROWS).iterrows():
        failed = "ok" in row and not row["ok"]
        if failed:
            pdf.set_text_color(200, 0, 0)
        for col in cols:
            pdf.cell(w, 7, _cell_text(row[col]), 1, 0, 'C')
        pdf.ln()
        pdf.set_text_color(0, 0, 0)

    if len(ordered) > MAX_ROWS:
        pdf.set_font("Arial", "I", 8)
        pdf.cell(0, 6, f"... {len(ordered) - MAX_ROWS} more rows in the CSV output", ln=True)


def generate_pdf_report(title, suites, summary=None):
    """
    Generates a PDF summary of verification suites and returns the binary content.
    `suites` maps a suite name to its per-case DataFrame.
    """
    pdf = PDF()
    pdf.add_page()

    # --- Title Section ---
    pdf.set_font("Arial", "B", 20)
    pdf.cell(0, 15, _latin1(title), ln=True, align="C")

    passed = sum(bool(frame["ok"].all()) for frame in suites.values() if "ok" in frame)
    pdf.set_font("Arial", "B", 14)
    pdf.set_text_color(0, 100, 0) if passed == len(suites) else pdf.set_text_color(200, 0, 0)
    pdf.cell(0, 10, f"Suites passed: {passed}/{len(suites)}", ln=True, align="C")
    pdf.set_text_color(0, 0, 0)

    # --- Summary ---
    if summary:
        pdf.ln(5)
        pdf.set_font("Arial", "B", 14)
        pdf.set_fill_color(240, 240, 240)
        pdf.cell(0, 10, "Summary", ln=True, fill=True)
        pdf.ln(2)
        pdf.set_font("Arial", "", 11)
        for key, value in summary.items():
            pdf.cell(0, 7, f"{_latin1(key)}: {_cell_text(value)}", ln=True)

    # --- Per-suite tables ---
    for name, frame in suites.items():
        pdf.ln(8)
        pdf.set_font("Arial", "B", 14)
        pdf.set_fill_color(240, 240, 240)
        status = "PASS" if "ok" not in frame or frame["ok"].all() else "FAIL"
        pdf.cell(0, 10, f"{_latin1(name)} ({len(frame)} cases) - {status}", ln=True, fill=True)
        pdf.ln(2)
        _suite_table(pdf, frame)

    return pdf.output(dest='S').encode('latin-1')
