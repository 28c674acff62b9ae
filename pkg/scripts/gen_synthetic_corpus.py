#!/usr/bin/env python3
"""Generate the bundled synthetic screen corpus under data/synthetic/.

Writes four checked-in artifacts:

* raw_detections.jsonl  - detector-style records with realistic quirks
  (missing ids, state-suffixed types, boxes that spill off-screen, one
  element fully outside the screen);
* screens.jsonl         - the validated annotations produced by ingest;
* spotlight.jsonl       - summarization/captioning/tappability records;
* mixture.json          - a mixture spec over pipeline outputs.

The layout is hand-designed so the corpus exercises every generation
rule: stacked text lines that merge, picture/caption pairs, duplicate
texts and icons (excluded as ambiguous targets), one-character and
over-long texts (excluded from reading tasks), icons outside the
taxonomy, widgets without text, and screens with exactly 2, 3, 14, and
15 grouped elements around the free-form eligibility boundary.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from uibench import __version__
from uibench.advanced import screen_eligible_advanced
from uibench.grouping import group_screen_elements
from uibench.ingest import IngestReport, ingest_screen
from uibench.screens import ScreenAnnotation, make_header, write_jsonl, write_screens
from uibench.taskgen import element_category, load_icon_classes


def el(id_, ui_type, bbox, text=None, **extra):
    d = {"id": id_, "ui_type": ui_type, "bbox": list(bbox)}
    if text is not None:
        d["text"] = text
    d.update(extra)
    return d


def raw_screens() -> list[dict]:
    screens = [
        {
            "screen_id": "syn-000", "platform": "iphone", "width": 828, "height": 1792,
            "elements": [
                el("t0", "Text", (60, 200, 520, 280), "Welcome back"),
                el("t1", "Text", (60, 380, 700, 440), "Sign in to continue your journey"),
                el("i0", "Icon", (314, 600, 514, 800), "avatar"),
                el("w0", "Button", (60, 1000, 768, 1100), "Sign In", interactive=True),
                el("w1", "Checkbox (Unchecked)", (60, 1160, 420, 1230), "Remember me"),
                el("i1", "Icon", (600, 1160, 680, 1240), "lock"),
            ],
        },
        {
            "screen_id": "syn-001", "platform": "android", "width": 1440, "height": 2560,
            "elements": [
                el("t0", "Text", (200, 200, 1240, 260), "Notification preferences"),
                el("t1", "Text", (200, 270, 1240, 330), "for your account"),
                el("w0", "Toggle", (200, 500, 1240, 580), "Dark Mode"),
                el("w1", "Toggle (Checked)", (200, 640, 1240, 720), "Wi-Fi"),
                el("i0", "Icon", (1300, 80, 1400, 180), "settings"),
                el("t2", "Text", (200, 800, 900, 860), "Battery saver is on"),
            ],
        },
        {
            "screen_id": "syn-002", "platform": "iphone", "width": 1125, "height": 2436,
            "elements": [
                el("t1", "Text", (80, 80, 460, 140), "Photos"),
                el("p0", "Picture", (112, 300, 1012, 900)),
                el("t0", "Text", (262, 910, 862, 960), "Sunset over the bay"),
                el("w0", "Button", (80, 1100, 520, 1200), "Share", interactive=True),
                el("i0", "Icon", (900, 1100, 1012, 1212), "share"),
            ],
        },
        {
            "screen_id": "syn-003", "platform": "android", "width": 2560, "height": 1440,
            "elements": [
                el("t0", "Text", (1100, 600, 1300, 660), "Done"),
                el("w0", "Button", (1100, 760, 1460, 860), "Continue", interactive=True),
            ],
        },
        {
            "screen_id": "syn-004", "platform": "iphone", "width": 828, "height": 1792,
            "elements": [
                e
                for k, (icon, label, btn) in enumerate([
                    ("home", "Home feed", "Open"),
                    ("search", "Search results", "View"),
                    ("settings", "Settings panel", "Edit"),
                    ("camera", "Camera roll", "Snap"),
                    ("folder", "Folder view", "Browse"),
                ])
                for e in (
                    el(f"i{k}", "Icon", (60, 150 + 300 * k, 140, 230 + 300 * k), icon),
                    el(f"t{k}", "Text", (180, 150 + 300 * k, 560, 230 + 300 * k), label),
                    el(f"w{k}", "Button", (600, 150 + 300 * k, 760, 230 + 300 * k), btn),
                )
            ],
        },
        {
            "screen_id": "syn-005", "platform": "iphone", "width": 2436, "height": 1125,
            "elements": [
                el("t0", "Text", (200, 300, 500, 360), "Delete"),
                el("t1", "Text", (600, 300, 900, 360), "Delete"),
                el("t2", "Text", (200, 500, 700, 560), "Archive inbox"),
                el("i0", "Icon", (1000, 280, 1080, 360), "delete"),
                el("i1", "Icon", (1200, 280, 1280, 360), "delete"),
                el("w0", "Button", (1800, 300, 1960, 380), "OK"),
                el("w1", "Button", (2000, 300, 2260, 380), "Cancel"),
            ],
        },
        {
            "screen_id": "syn-006", "platform": "android", "width": 1440, "height": 2560,
            "elements": [
                el("t0", "Text", (100, 200, 140, 260), "a"),
                el("t1", "Text", (100, 400, 1340, 460),
                   "This is a very long paragraph of text that keeps going and going"),
                el("t2", "Text", (100, 600, 500, 660), "Short enough"),
                el("w0", "Slider", (100, 800, 1340, 860), interactive=True),
                el("i0", "Icon", (100, 1000, 180, 1080), "sparkle_burst"),
                el("i1", "Icon", (300, 1000, 380, 1080), "search"),
            ],
        },
        {
            "screen_id": "syn-007", "platform": "iphone", "width": 828, "height": 1792,
            "elements": [
                el("t0", "Text", (60, 80, 260, 140), "Inbox"),
                el("i0", "Icon", (700, 80, 780, 140), "menu"),
                el("w0", "Button", (60, 300, 400, 380), "Compose", interactive=True),
                el("w1", "Button", (440, 300, 768, 380), "Refresh"),
                el("t1", "Text", (60, 600, 600, 660), "No new messages today"),
            ],
        },
        {
            "screen_id": "syn-008", "platform": "android", "width": 2560, "height": 1440,
            "elements": [
                el("t0", "Text", (200, 200, 560, 260), "Now playing"),
                el("t1", "Text", (200, 310, 900, 370), "Midnight Drive by The Lanterns"),
                el("i0", "Icon", (1180, 600, 1280, 700), "play", confidence=0.97),
                el("i1", "Icon", (1380, 600, 1480, 700), "pause"),
                el("w0", "Slider", (200, 900, 2360, 960), "Volume"),
                el("w1", "Button", (200, 1100, 560, 1200), "Shuffle"),
                el("w9", "Button", (2700, 1500, 2900, 1600), "Ghost"),
            ],
        },
        {
            "screen_id": "syn-009", "platform": "iphone", "width": 828, "height": 1792,
            "elements": [
                el("t0", "Text", (60, 100, 500, 160), "Order summary"),
                el("i0", "Icon", (700, 100, 780, 180), "cart"),
                el("t1", "Text", (60, 260, 460, 320), "Total: $42.18"),
                el("i1", "Icon", (700, 260, 780, 340), "info"),
                el("w2", "Checkbox (Checked)", (60, 1100, 540, 1180), "Gift wrap"),
                el("w1", "Input", (60, 1300, 500, 1380), "Promo code"),
                el("w0", "Button", (60, 1500, 768, 1600), "Place order", interactive=True),
            ],
        },
        {
            "screen_id": "syn-010", "platform": "android", "width": 1440, "height": 2560,
            "elements": [
                el("t0", "Text", (100, 100, 340, 160), "Maps"),
                el("i0", "Icon", (1200, 100, 1300, 200), "location"),
                el("w0", "Button", (400, 2200, 1040, 2320), "Navigate", interactive=True),
            ],
        },
        {
            "screen_id": "syn-011", "platform": "iphone", "width": 1125, "height": 2436,
            "elements": [
                e
                for k, (label, other) in enumerate([
                    ("Message threads", el("i0", "Icon", (700, 100, 800, 180), "bookmark")),
                    ("Pinned chats", el("i1", "Icon", (700, 400, 800, 480), "call")),
                    ("Unread first", el("i2", "Icon", (700, 700, 800, 780), "chat")),
                    ("Quiet hours", el("i3", "Icon", (700, 1000, 800, 1080), "edit")),
                    ("Linked devices", el("w0", "Button", (700, 1300, 1000, 1380), "Reply")),
                    ("Backup status", el("w1", "Input", (700, 1600, 1060, 1680), "Type a message")),
                    ("Data usage", el("w2", "Toggle", (700, 1900, 1000, 1980), "Mute thread")),
                ])
                for e in (
                    el(f"t{k}", "Text", (100, 100 + 300 * k, 600, 180 + 300 * k), label),
                    other,
                )
            ],
        },
        {
            "screen_id": "syn-012", "platform": "android", "width": 2560, "height": 1440,
            "elements": [
                el("t3", "Text", (300, 100, 700, 160), "Documents"),
                el("t0", "Text", (300, 400, 1800, 460), "Meeting notes"),
                el("t1", "Text", (300, 470, 1800, 530), "shared with the team"),
                el("t2", "Text", (300, 540, 1800, 600), "last edited yesterday"),
                el("i0", "Icon", (2300, 100, 2400, 200), "folder"),
                el("w0", "Button", (2000, 1200, 2400, 1300), "Open"),
            ],
        },
        {
            "screen_id": "syn-013", "platform": "iphone", "width": 828, "height": 1792,
            "elements": [
                el("p0", "Picture", (100, 200, 728, 700)),
                el("t0", "Text", (150, 710, 678, 770), "Mount Rainier at dawn"),
                el("p1", "Picture", (100, 900, 728, 1400)),
                el("t1", "Text", (150, 1410, 678, 1470), "Harbor lights"),
                el("w0", "Button", (200, 1600, 628, 1700), "Upload", interactive=True),
            ],
        },
        {
            "screen_id": "syn-014", "platform": "android", "width": 1440, "height": 2560,
            "elements": [
                el("t0", "Text", (100, 100, 520, 170), "Calculator"),
                el("i0", "Icon", (1300, 100, 1400, 200), "close"),
                el("t1", "Text", (100, 300, 800, 420), "3.14159"),
                el("w0", "Button", (200, 1500, 500, 1700), "7"),
                el("w1", "Button", (570, 1500, 870, 1700), "8"),
                el("w2", "Button", (940, 1500, 1240, 1700), "9"),
                el("w3", "Button", (570, 1780, 870, 1980), "0"),
            ],
        },
        {
            "screen_id": "syn-015", "platform": "iphone", "width": 2436, "height": 1125,
            "elements": [
                el("w0", "Tab", (100, 80, 500, 160), "Today"),
                el("w1", "Tab", (550, 80, 950, 160), "Weekly"),
                el("i0", "Icon", (2200, 80, 2300, 180), "refresh"),
                el("t0", "Text", (100, 400, 700, 470), "Partly cloudy"),
                el("t1", "Text", (100, 560, 800, 630), "Feels like 21 degrees"),
            ],
        },
        {
            "screen_id": "syn-016", "platform": "android", "width": 2560, "height": 1440,
            "elements": [
                el("i0", "Icon", (-20, 60, 80, 160), "arrow_backward"),
                el("i1", "Icon", (120, 60, 220, 160), "arrow_forward"),
                el("i2", "Icon", (260, 60, 360, 160), "refresh"),
                el("w0", "Input", (420, 60, 2100, 160), "Search or type URL"),
                el("t0", "Text", (200, 400, 560, 460), "Bookmarks"),
                {"ui_type": "Button", "bbox": [2200, 60, 2480, 160], "text": "New tab"},
            ],
        },
        {
            "screen_id": "syn-017", "platform": "iphone", "width": 828, "height": 1792,
            "elements": [
                el("t0", "Text", (60, 100, 400, 160), "Step 2 of 3"),
                el("i0", "Icon", (700, 100, 780, 180), "check"),
                el("w0", "Button", (60, 1500, 380, 1600), "Next"),
                el("w1", "Button", (420, 1500, 740, 1600), "Next"),
            ],
        },
        {
            "screen_id": "syn-018", "platform": "android", "width": 1440, "height": 2560,
            "elements": [
                el("t0", "Text", (200, 300, 1240, 360), "Your storage is almost full"),
                el("t1", "Text", (200, 370, 1240, 430), "upgrade to keep syncing"),
                el("p0", "Picture", (370, 600, 1070, 1300)),
                el("t2", "Text", (430, 1310, 1010, 1370), "Cloud backup illustration"),
                el("w0", "Button", (400, 1700, 1040, 1800), "Upgrade", interactive=True),
                el("w1", "Button", (400, 1900, 1040, 2000), "Not now"),
            ],
        },
        {
            "screen_id": "syn-019", "platform": "iphone", "width": 1125, "height": 2436,
            "elements": [
                el("t0", "Text", (80, 100, 420, 170), "Profile"),
                el("i1", "Icon", (900, 100, 1020, 220), "globe"),
                el("i0", "Icon", (450, 300, 650, 500), "avatar"),
                el("w0", "Button", (80, 600, 560, 690), "Edit profile", interactive=True),
                el("w1", "Toggle", (80, 840, 1040, 920), "Public account"),
                el("t1", "Text", (80, 1100, 640, 1160), "Member since 2019"),
                el("w2", "Button", (80, 2200, 1040, 2320), "Log out"),
            ],
        },
    ]
    return screens


# Grouped element count each screen must end up with; screens with exactly
# 2 or 15 sit outside the free-form eligibility window on purpose.
EXPECTED_GROUPED_COUNTS = {
    "syn-000": 6, "syn-001": 5, "syn-002": 4, "syn-003": 2, "syn-004": 15,
    "syn-005": 7, "syn-006": 6, "syn-007": 5, "syn-008": 6, "syn-009": 7,
    "syn-010": 3, "syn-011": 14, "syn-012": 4, "syn-013": 3, "syn-014": 7,
    "syn-015": 5, "syn-016": 6, "syn-017": 4, "syn-018": 4, "syn-019": 7,
}


def spotlight_records() -> list[dict]:
    return [
        {"record_id": "s2w-001", "task": "screen2words", "platform": "iphone",
         "screen_id": "syn-000", "image": "syn-000.png",
         "answer": "A login screen asking the user to sign in."},
        {"record_id": "s2w-002", "task": "screen2words", "platform": "android",
         "screen_id": "syn-008", "image": "syn-008.png",
         "answer": "A music player showing the current track."},
        {"record_id": "s2w-003", "task": "screen2words", "platform": "iphone",
         "screen_id": "syn-002", "image": "syn-002.png",
         "answer": "A photo gallery with a shared sunset picture."},
        {"record_id": "wc-001", "task": "widget_captions", "platform": "iphone",
         "screen_id": "syn-000", "image": "syn-000.png",
         "answer": "signs the user in", "bbox": [60, 1000, 768, 1100],
         "width": 828, "height": 1792},
        {"record_id": "wc-002", "task": "widget_captions", "platform": "android",
         "screen_id": "syn-008", "image": "syn-008.png",
         "answer": "starts playback", "bbox": [1180, 600, 1280, 700],
         "width": 2560, "height": 1440},
        {"record_id": "wc-003", "task": "widget_captions", "platform": "iphone",
         "screen_id": "syn-013", "image": "syn-013.png",
         "answer": "uploads the selected photos", "bbox": [240, 879, 771, 935]},
        {"record_id": "tap-001", "task": "taperception", "platform": "iphone",
         "screen_id": "syn-000", "image": "syn-000.png",
         "answer": True, "bbox": [60, 1000, 768, 1100], "width": 828, "height": 1792},
        {"record_id": "tap-002", "task": "taperception", "platform": "android",
         "screen_id": "syn-008", "image": "syn-008.png",
         "answer": "no", "bbox": [200, 200, 560, 260], "width": 2560, "height": 1440},
    ]


def mixture_spec() -> dict:
    return {
        "pools": {
            "referring": {"path": "elementary/iphone/ocr.train.jsonl", "weight": 2},
            "grounding": {"path": "elementary/android/find_text.train.jsonl", "weight": 1},
            "listing": {"path": "elementary/iphone/widget_listing.train.jsonl", "weight": 1},
            "captions": {"path": "spotlight/widget_captions.train.jsonl", "weight": 1},
        },
        "total": 12,
        "seed": 7,
        "with_replacement": False,
    }


def check_corpus(screens: list[ScreenAnnotation]) -> None:
    icon_classes = load_icon_classes()
    eligible_adv = 0
    cat_counts = {"text": 0, "icon": 0, "widget": 0}
    for s in screens:
        grouped = group_screen_elements(s.elements)
        got = len(grouped)
        want = EXPECTED_GROUPED_COUNTS[s.screen_id]
        assert got == want, f"{s.screen_id}: grouped to {got} elements, wanted {want}"
        g = ScreenAnnotation(s.screen_id, s.platform, s.width, s.height, grouped)
        if screen_eligible_advanced(g):
            eligible_adv += 1
        for e in grouped:
            cat = element_category(e, g, icon_classes)
            if cat:
                cat_counts[cat] += 1
    assert eligible_adv == 18, f"expected 18 free-form-eligible screens, got {eligible_adv}"
    for cat, n in cat_counts.items():
        assert n > 0, f"no eligible {cat} elements in the corpus"
    print(f"corpus checks OK: 18 free-form-eligible screens, categories {cat_counts}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default=str(Path(__file__).resolve().parents[1] / "data/synthetic"))
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    raw = raw_screens()
    write_jsonl(out / "raw_detections.jsonl", raw)

    report = IngestReport()
    screens = [s for r in raw if (s := ingest_screen(r, report)) is not None]
    assert report.screens_out == 20, report.to_dict()
    assert report.clipped == 1, report.to_dict()
    assert len(report.rejects) == 1, report.to_dict()
    check_corpus(screens)

    write_screens(out / "screens.jsonl", screens, header=make_header(__version__))
    write_jsonl(out / "spotlight.jsonl", spotlight_records())
    (out / "mixture.json").write_text(
        json.dumps(mixture_spec(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    total_elements = sum(len(s.elements) for s in screens)
    print(f"wrote {len(screens)} screens ({total_elements} elements), "
          f"{len(spotlight_records())} spotlight records -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
