"""The shipped desk-scale benchmark: 71 multi-source objects and 52 items.

The corpus is an original, authored reconstruction matching the published
counts (71 objects over calendar/image/note/document/call/alarm/contact;
20 ingestion checks plus 32 question items, 8 of them deletion-tagged).
Everything here is deterministic: materializing the corpus twice produces
byte-identical files, and item supporting-object ids are resolved from the
same content hashes ingestion uses.

Ingestion-check gold facts use a tiny DSL evaluated against the graph:

    node:<Label>:<display substring>
    edge:<predicate>:<src substring>"->"<dst substring>
    prop:<display substring>:<key>=<value substring>
    unique:<Label>:<canonical key>
    prov_min:<Label>:<display substring>:<count>
    vec:<display substring>
"""
from __future__ import annotations

import json
from pathlib import Path

from ..ingestion import load_records
from ..model import BenchmarkItem

# --- corpus files -------------------------------------------------------------

_ICS = ("BEGIN:VEVENT\nSUMMARY:{summary}\nDTSTART:{start}\nDTEND:{end}\n"
        "{extra}END:VEVENT\n")


def _ics(summary, start, end, location=None, attendee=None, description=None):
    extra = ""
    if location:
        extra += f"LOCATION:{location}\n"
    if attendee:
        extra += f"ATTENDEE:{attendee}\n"
    if description:
        extra += f"DESCRIPTION:{description}\n"
    return _ICS.format(summary=summary, start=start, end=end, extra=extra)


def _call(peer, at, duration, note=None):
    payload = {"modality": "call", "peer": peer, "at": at, "duration_min": duration}
    if note:
        payload["note"] = note
    return json.dumps(payload, indent=2) + "\n"


def _alarm(label, at, recurrence=None):
    payload = {"modality": "alarm", "label": label, "at": at}
    if recurrence:
        payload["recurrence"] = recurrence
    return json.dumps(payload, indent=2) + "\n"


def _contact(name, **fields):
    payload = {"modality": "contact", "name": name, **fields}
    return json.dumps(payload, indent=2) + "\n"


# filename -> content; images are (bytes, caption, taken_at|None)
CORPUS_FILES: dict[str, str] = {
    # calendar (13)
    "cal_weekend_trip.ics": _ics(
        "Weekend Trip", "20250718T090000Z", "20250720T180000Z",
        location="Florence"),
    "cal_work_monday.ics": _ics(
        "Work", "20250714T090000Z", "20250714T170000Z", location="Office 4B"),
    "cal_berlin_conference.ics": _ics(
        "Berlin Conference", "20250908T090000Z", "20250910T180000Z",
        location="Berlin Congress Center"),
    "cal_project_alpha_review.ics": _ics(
        "Project Alpha Review", "20250722T140000Z", "20250722T153000Z",
        location="Office 4B", attendee="Marco Rossi"),
    "cal_quarterly_planning.ics": _ics(
        "Quarterly Planning", "20250722T130000Z", "20250722T170000Z",
        location="Office 4B"),
    "cal_team_standup.ics": _ics(
        "Team Standup", "20250715T093000Z", "20250715T094500Z",
        location="Office 4B"),
    "cal_lake_hike.ics": _ics(
        "Lake Hike", "20250802T080000Z", "20250802T160000Z",
        location="Lake Garda", attendee="Elena Fischer"),
    "cal_dentist.ics": _ics(
        "Dentist Appointment", "20250729T110000Z", "20250729T114500Z",
        location="Smile Clinic"),
    "cal_birthday_dinner.ics": _ics(
        "Birthday Dinner", "20250809T190000Z", "20250809T223000Z",
        location="Trattoria Bella", attendee="Anna Keller"),
    "cal_apartment_viewing.ics": _ics(
        "Apartment Viewing", "20250816T100000Z", "20250816T104500Z",
        location="Via Roma 12"),
    "cal_italian_class.ics": _ics(
        "Italian Class", "20250902T180000Z", "20250902T193000Z",
        location="Community Center"),
    "cal_city_marathon.ics": _ics(
        "City Marathon", "20250921T080000Z", "20250921T130000Z",
        location="River Park"),
    "cal_coffee_catchup.ics": _ics(
        "Coffee Catchup", "20250725T150000Z", "20250725T160000Z",
        attendee="S. Green"),

    # notes (11)
    "note_packing_list.txt": (
        "title: Packing List\nremember sunscreen and hiking boots\n"
        "shared cabin with Elena Fischer\n"),
    "note_trip_plan.txt": (
        "title: Trip Plan\nvisit the uffizi gallery on saturday\n"
        "dinner reservation at seven\n"),
    "note_meeting_notes.txt": (
        "title: Meeting Notes\naction items assigned to Marco Rossi\n"
        "budget draft due friday\n"),
    "note_groceries.txt": "title: Groceries\nmilk, eggs, coffee beans, basil\n",
    "note_gift_ideas.txt": (
        "title: Gift Ideas\nscarf for Anna Keller\n"
        "book about sailing for David Chen\n"),
    "note_cabin_wifi.txt": "title: Cabin Wifi\npassword: lakeview2025\n",
    "note_marathon_training.txt": (
        "title: Marathon Training\nlong run every sunday morning\n"),
    "note_pasta_recipe.txt": (
        "title: Pasta Recipe\ntomatoes, garlic, olive oil, fresh basil\n"),
    "note_italian_vocab.txt": (
        "title: Italian Vocabulary\nbuongiorno, grazie, arrivederci\n"),
    "note_car_service.txt": (
        "title: Car Service\nbooked for early october at the garage\n"),
    "note_monthly_budget.txt": (
        "title: Monthly Budget\ngroceries come first\n"
        "utilities around 140 EUR\n"),

    # documents (8)
    "doc_project_alpha_plan.md": (
        "title: Project Alpha Plan\nmilestones drafted with Marco Rossi\n"
        "autumn release checklist\n"),
    "doc_apartment_lease.md": (
        "title: Apartment Lease\nmonthly rent: 950 EUR\n"
        "deposit held by the landlord\n"),
    "doc_travel_insurance.md": (
        "title: Travel Insurance\npolicy number: TI-2025-118\n"
        "coverage: medical and luggage\n"),
    "doc_curriculum_vitae.md": (
        "title: Curriculum Vitae\nupdated for the autumn applications\n"),
    "doc_conference_abstract.md": (
        "title: Conference Abstract\nsubmission for the knowledge systems track\n"),
    "doc_reading_list.md": (
        "title: Reading List\ngraph algorithms, information retrieval\n"),
    "doc_tax_summary.md": (
        "title: Tax Summary\nfiled in june, refund expected 320 EUR\n"),
    "doc_laptop_warranty.md": (
        "title: Laptop Warranty\nexpires next spring, keep the original box\n"),

    # calls (10)
    "call_sarah_0714.json": _call("Sarah Green", "2025-07-14T08:45:00Z", 4),
    "call_marco_0722.json": _call("Marco Rossi", "2025-07-22T13:30:00Z", 6),
    "call_maria_0718.json": _call("Maria Bianchi", "2025-07-18T08:15:00Z", 10),
    "call_sarah_0725.json": _call("Sarah Green", "2025-07-25T16:30:00Z", 12),
    "call_elena_0801.json": _call("Elena Fischer", "2025-08-01T19:00:00Z", 8),
    "call_nina_0728.json": _call("Nina Petrova", "2025-07-28T09:10:00Z", 3),
    "call_david_0810.json": _call("David Chen", "2025-08-10T11:00:00Z", 15),
    "call_anna_0809.json": _call("Anna Keller", "2025-08-09T17:30:00Z", 5),
    "call_lucas_0816.json": _call("Lucas Moreau", "2025-08-16T09:15:00Z", 7),
    "call_marco_0908.json": _call("Marco Rossi", "2025-09-08T07:30:00Z", 4),

    # alarms (7)
    "alarm_morning_run.json": _alarm("Morning Run", "2025-07-15T06:30:00Z",
                                     "weekdays"),
    "alarm_flight_checkin.json": _alarm("Flight Check-in", "2025-09-07T18:00:00Z"),
    "alarm_train_departure.json": _alarm("Train Departure", "2025-07-18T07:30:00Z"),
    "alarm_hike_start.json": _alarm("Hike Start", "2025-08-02T06:45:00Z"),
    "alarm_standup_reminder.json": _alarm("Standup Reminder", "2025-07-15T09:25:00Z"),
    "alarm_marathon_wakeup.json": _alarm("Marathon Wakeup", "2025-09-21T06:00:00Z"),
    "alarm_vitamins.json": _alarm("Vitamins", "2025-07-16T08:00:00Z", "daily"),

    # contacts (8)
    "contact_sarah_green.json": _contact(
        "Sarah Green", phone="+39 333 1234567", email="sarah.green@example.com"),
    "contact_marco_rossi.json": _contact(
        "Marco Rossi", phone="+39 366 2223344", organization="Acme Analytics"),
    "contact_elena_fischer.json": _contact(
        "Elena Fischer", email="elena.fischer@example.org"),
    "contact_david_chen.json": _contact("David Chen", phone="+1 415 555 0170"),
    "contact_anna_keller.json": _contact(
        "Anna Keller", phone="+49 171 5550123", birthday="09 August"),
    "contact_lucas_moreau.json": _contact(
        "Lucas Moreau", phone="+33 6 5550 1889", organization="Moreau Properties"),
    "contact_nina_petrova.json": _contact(
        "Nina Petrova", email="nina.petrova@example.net"),
    "contact_maria_bianchi.json": _contact("Maria Bianchi", phone="+39 333 7654321"),
}

# images (14): filename -> (caption, taken_at | None)
CORPUS_IMAGES: dict[str, tuple[str, str | None]] = {
    "img_train_ticket.jpg": (
        "Train ticket, Rome to Florence, total 95 EUR", "2025-07-19T10:12:00Z"),
    "img_hotel_invoice.jpg": (
        "Hotel invoice, Florence, two nights, total 210 EUR", "2025-07-20T09:00:00Z"),
    "img_museum_ticket.jpg": (
        "Museum ticket for the uffizi gallery, 18 EUR", "2025-07-19T15:40:00Z"),
    "img_conference_dinner.jpg": (
        "Restaurant receipt from the conference dinner, 78.50 EUR",
        "2025-09-09T21:00:00Z"),
    "img_taxi_receipt.jpg": (
        "Taxi receipt to the conference venue, 22.50 EUR", "2025-09-08T09:15:00Z"),
    "img_flight_ticket.jpg": (
        "Flight ticket to Berlin, 149 EUR", "2025-09-08T10:00:00Z"),
    "img_ferry_ticket.jpg": (
        "Ferry ticket across the lake, 12 EUR", "2025-08-02T10:30:00Z"),
    "img_sunset_lake.jpg": (
        "Sunset over the lake with sailboats", "2025-08-02T15:30:00Z"),
    "img_whiteboard.jpg": (
        "Whiteboard sketch of the project architecture", "2025-07-22T14:45:00Z"),
    "img_group_photo.jpg": (
        "Group photo at the birthday dinner", "2025-08-09T21:00:00Z"),
    "img_marathon_finish.jpg": (
        "Finish line photo at the marathon", "2025-09-21T12:40:00Z"),
    "img_running_shoes.jpg": (
        "Receipt for running shoes, 90 EUR", "2025-09-13T11:00:00Z"),
    "img_pasta_dish.jpg": (
        "Plate of pasta at the trattoria", "2025-08-09T20:05:00Z"),
    "img_keynote_hall.jpg": (
        "Opening keynote at the conference main hall", "2025-09-08T09:30:00Z"),
}

CORPUS_OBJECT_COUNT = len(CORPUS_FILES) + len(CORPUS_IMAGES)  # 71


def write_corpus(directory) -> Path:
    """Materialize the corpus; byte-identical on every call."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, content in sorted(CORPUS_FILES.items()):
        (directory / name).write_text(content, encoding="utf-8")
    for name, (caption, taken_at) in sorted(CORPUS_IMAGES.items()):
        # placeholder pixels; the offline pipeline reads the caption sidecar
        (directory / name).write_bytes(b"\x89PKG" + name.encode("utf-8"))
        (directory / f"{name}.caption.txt").write_text(caption + "\n",
                                                       encoding="utf-8")
        if taken_at:
            meta = json.dumps({"taken_at": taken_at}, indent=2) + "\n"
            (directory / f"{name}.meta.json").write_text(meta, encoding="utf-8")
    return directory


# --- items ---------------------------------------------------------------------
# (id, scenario, question, gold_facts, supporting filenames)

_INGESTION_ITEMS = [
    ("ing-01", "node:Event:Weekend Trip"),
    ("ing-02", "node:Receipt:Train ticket"),
    ("ing-03", "prop:Train ticket:amount=95 EUR"),
    ("ing-04", "edge:during:Train ticket->Weekend Trip"),
    ("ing-05", "node:Event:Berlin Conference"),
    ("ing-06", "edge:during:Restaurant receipt->Berlin Conference"),
    ("ing-07", "node:Person:Sarah Green"),
    ("ing-08", "unique:Person:sarah green"),
    ("ing-09", "prov_min:Person:Sarah Green:3"),
    ("ing-10", "edge:with:Coffee Catchup->Sarah Green"),
    ("ing-11", "node:Contact:Anna Keller"),
    ("ing-12", "prop:Anna Keller:phone=+49 171 5550123"),
    ("ing-13", "node:Alarm:Flight Check-in"),
    ("ing-14", "node:Call:Call with Nina Petrova"),
    ("ing-15", "edge:during:Ferry ticket->Lake Hike"),
    ("ing-16", "edge:overlaps:Quarterly Planning->Project Alpha Review"),
    ("ing-17", "prop:Weekend Trip:location=Florence"),
    ("ing-18", "node:Photo:Sunset over the lake"),
    ("ing-19", "vec:Apartment Lease"),
    ("ing-20", "edge:during:Group photo->Birthday Dinner"),
]

_QUESTION_ITEMS = [
    # (id, scenario, question, gold facts, supporting filenames)
    ("sum-01", "deletion", "How much have I spent on the weekend trip so far?",
     ["323 EUR"],
     ["img_train_ticket.jpg", "img_hotel_invoice.jpg", "img_museum_ticket.jpg"]),
    ("sum-02", "reasoning", "How much did I spend at the Berlin Conference?",
     ["250 EUR"], []),
    ("sum-03", "deletion", "How much did the ferry ticket cost?",
     ["12 EUR"], ["img_ferry_ticket.jpg"]),
    ("sum-04", "deletion", "How much did the running shoes cost?",
     ["90 EUR"], ["img_running_shoes.jpg"]),
    ("sum-05", "reasoning", "How much do I pay monthly for the rent?",
     ["950 EUR"], []),
    ("sum-06", "reasoning", "How much have I spent at the lake?",
     ["12 EUR"], []),
    ("sum-07", "deletion", "How much do the utilities cost?",
     ["140 EUR"], ["note_monthly_budget.txt"]),
    ("sum-08", "reasoning", "How much have I spent in Florence?",
     ["323 EUR"], []),

    ("tmp-01", "reasoning", "Did Sarah call before I arrived at work?",
     ["Call with Sarah Green", "before"], []),
    ("tmp-02", "reasoning", "Did Marco call before the Project Alpha Review?",
     ["Call with Marco Rossi", "before"], []),
    ("tmp-03", "reasoning", "Did the museum visit happen before the hotel checkout?",
     ["Museum ticket", "before"], []),
    ("tmp-04", "reasoning", "Did the ferry ride happen after the lake hike began?",
     ["Ferry ticket", "after"], []),
    ("tmp-05", "reasoning", "Did Elena call before the lake hike?",
     ["Call with Elena Fischer", "before"], []),
    ("tmp-06", "reasoning", "Did Anna call before the birthday dinner?",
     ["Call with Anna Keller", "before"], []),
    ("tmp-07", "deletion", "Did Nina call before the dentist appointment?",
     ["Call with Nina Petrova"], ["call_nina_0728.json"]),
    ("tmp-08", "reasoning", "Did the whiteboard sketch happen after the team standup?",
     ["Whiteboard sketch", "after"], []),
    ("tmp-09", "reasoning",
     "Did the marathon finish photo happen after the Italian class?",
     ["Finish line photo", "after"], []),
    ("tmp-10", "reasoning",
     "Did the flight check-in alarm ring before the Berlin Conference?",
     ["Alarm: Flight Check-in", "before"], []),

    ("lkp-01", "reasoning", "When is the Berlin Conference?",
     ["2025-09-08", "2025-09-10"], []),
    ("lkp-02", "reasoning", "When is the Weekend Trip?",
     ["2025-07-18", "2025-07-20"], []),
    ("lkp-03", "reasoning", "Where is the Project Alpha Review?",
     ["Office 4B"], []),
    ("lkp-04", "reasoning", "Where is the Birthday Dinner?",
     ["Trattoria Bella"], []),
    ("lkp-05", "deletion", "What is Sarah Green's phone number?",
     ["+39 333 1234567"], ["contact_sarah_green.json"]),
    ("lkp-06", "reasoning", "What is Marco Rossi's organization?",
     ["Acme Analytics"], []),
    ("lkp-07", "deletion", "What is the amount of the hotel invoice?",
     ["210 EUR"], ["img_hotel_invoice.jpg"]),
    ("lkp-08", "reasoning", "What is the amount of the train ticket?",
     ["95 EUR"], []),
    ("lkp-09", "deletion", "When is the dentist appointment?",
     ["2025-07-29"], ["cal_dentist.ics"]),
    ("lkp-10", "reasoning", "Where is the Lake Hike?",
     ["Lake Garda"], []),
    ("lkp-11", "reasoning", "What is the amount of the flight ticket?",
     ["149 EUR"], []),
    ("lkp-12", "reasoning", "When is the Italian Class?",
     ["2025-09-02"], []),
    ("lkp-13", "reasoning", "What is Anna Keller's birthday?",
     ["09 August"], []),
    ("lkp-14", "reasoning", "What is the policy number of the travel insurance?",
     ["TI-2025-118"], []),
]

INGESTION_ITEM_COUNT = len(_INGESTION_ITEMS)    # 20
QUESTION_ITEM_COUNT = len(_QUESTION_ITEMS)      # 32


def build_items(corpus_dir) -> list[BenchmarkItem]:
    """Items with supporting filenames resolved to real record ids."""
    by_filename = {}
    for record in load_records(corpus_dir):
        by_filename[record.metadata["filename"]] = record.id
    items = [
        BenchmarkItem(id=item_id, scenario="ingestion", question="",
                      gold_facts=[fact], supporting_objects=[])
        for item_id, fact in _INGESTION_ITEMS
    ]
    for item_id, scenario, question, gold, supports in _QUESTION_ITEMS:
        items.append(BenchmarkItem(
            id=item_id, scenario=scenario, question=question, gold_facts=gold,
            supporting_objects=[by_filename[name] for name in supports]))
    return items


def write_items(corpus_dir, path) -> Path:
    """Write the items file (newline-delimited JSON, one BenchmarkItem each)."""
    path = Path(path)
    lines = []
    for item in build_items(corpus_dir):
        lines.append(json.dumps({
            "id": item.id, "scenario": item.scenario, "question": item.question,
            "gold_facts": item.gold_facts,
            "supporting_objects": item.supporting_objects,
            "full_credit_answer": item.full_credit_answer,
        }, sort_keys=True))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_items(path) -> list[BenchmarkItem]:
    items = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        items.append(BenchmarkItem(
            id=data["id"], scenario=data["scenario"], question=data["question"],
            gold_facts=data["gold_facts"],
            supporting_objects=data.get("supporting_objects", []),
            full_credit_answer=data.get("full_credit_answer")))
    return items
