"""Seeded sentence-frame grammar producing labeled queries by construction.

Frames are co-designed with the mock ruleset: every emitted query matches the
rule for its own label, which is what makes the offline evaluation loop exact.
"""
from __future__ import annotations

import random

PREFIXES = ["", "please ", "hey, ", "could you ", "can you ", "i want to ",
            "i'd like to ", "quickly "]
SUFFIXES = ["", " please", " for me", " right away", " when you get a chance",
            " thanks"]

LOCATIONS = ["Boston", "Paris", "London", "Tokyo", "New York", "Sydney",
             "Berlin", "Chicago", "Madrid", "Rome", "Oslo", "Dublin",
             "Cairo", "Lima", "Toronto", "Seattle"]
NAMES = ["bob", "alice", "carol", "dave", "erin", "frank", "grace", "heidi",
         "ivan", "judy", "mallory", "oscar"]
CONTENTS = ["buy milk", "call the dentist", "water the plants",
            "pick up the dry cleaning", "renew the passport",
            "feed the cat", "return the library books", "pay the rent",
            "book a haircut", "charge the bike lights", "clean the garage",
            "submit the expense form", "buy a birthday gift",
            "fix the leaking tap", "back up the laptop"]
MESSAGES = ["the build is done", "dinner is ready", "the package arrived",
            "the meeting moved", "the report is due", "the car is fixed",
            "the guests arrived", "the printer is out of toner"]
SUBJECTS = ["the quarterly report", "our trip", "the project deadline",
            "lunch on friday", "the broken printer", "the new contract",
            "the team offsite", "the budget review"]
TITLES = ["team sync", "dentist visit", "project review", "yoga class",
          "board meeting", "standup", "design workshop", "one on one",
          "budget planning", "retrospective"]
TOPICS = ["cats", "pirates", "robots", "wizards", "penguins", "dragons",
          "astronauts", "vikings"]
GENRES = ["jazz", "classical", "rock", "lofi", "blues", "disco", "folk"]
COUNTRIES = ["france", "peru", "iceland", "kenya", "vietnam", "portugal",
             "uruguay", "nepal"]
FOODS = ["pizza", "ramen", "tacos", "sushi", "falafel", "dumplings",
         "paella", "pancakes"]
DATES = ["2024-03-05", "2024-04-12", "2024-05-20", "2024-06-08", "2024-07-15",
         "2024-08-23", "2024-09-30", "today"]
TIMES = ["9:00", "10:30", "13:15", "15:45", "18:00", "20:30"]


def _num(rng: random.Random) -> str:
    if rng.random() < 0.3:
        return f"{rng.uniform(0.1, 99):.2f}"
    return str(rng.randint(1, 999))


def _small(rng: random.Random) -> str:
    return str(rng.randint(0, 12))


def _angle(rng: random.Random) -> str:
    return f"{rng.uniform(-3.1, 3.1):.2f}"


_FILLERS = {
    "a": _num, "b": _num, "x": _num, "n": _small, "angle": _angle,
    "id": lambda rng: str(rng.randint(1, 99)),
    "loc": lambda rng: rng.choice(LOCATIONS),
    "name": lambda rng: rng.choice(NAMES),
    "content": lambda rng: rng.choice(CONTENTS),
    "message": lambda rng: rng.choice(MESSAGES),
    "subject": lambda rng: rng.choice(SUBJECTS),
    "title": lambda rng: rng.choice(TITLES),
    "topic": lambda rng: rng.choice(TOPICS),
    "genre": lambda rng: rng.choice(GENRES),
    "country": lambda rng: rng.choice(COUNTRIES),
    "food": lambda rng: rng.choice(FOODS),
    "date": lambda rng: rng.choice(DATES),
    "time": lambda rng: rng.choice(TIMES),
}

# function key -> (frames, allow_prefix, allow_suffix)
_FRAMES: dict[str, tuple[list[str], bool, bool]] = {
    "calculator.add": ([
        "add {a} and {b}",
        "add {a} to {b}",
        "what is {a} plus {b}",
        "compute the sum of {a} and {b}",
        "add {a} with {b}",
    ], True, True),
    "calculator.subtract": ([
        "subtract {b} from {a}",
        "what is {a} minus {b}",
        "calculate {a} minus {b}",
        "find the difference between {a} and {b}",
        "work out {a} minus {b}",
    ], True, True),
    "calculator.multiply": ([
        "multiply {a} by {b}",
        "what is {a} times {b}",
        "compute the product of {a} and {b}",
        "multiply {a} with {b}",
        "{a} times {b}",
    ], True, True),
    "calculator.divide": ([
        "divide {a} by {b}",
        "what is {a} divided by {b}",
        "compute the quotient of {a} and {b}",
        "what's {a} over {b}",
        "divide {a} by {b} for homework",
    ], True, True),
    "calculator.power": ([
        "raise {a} to the power of {b}",
        "what is {a} to the power {b}",
        "compute {a} ^ {b}",
        "what is the {b}th power of {a}",
        "{a} raised to the power of {b}",
    ], True, True),
    "calculator.log": ([
        "log of {x} base {b}",
        "what is the logarithm of {x} to base {b}",
        "log base {b} of {x}",
        "natural log of {x}",
        "take the natural logarithm of {x}",
    ], True, True),
    "calculator.factorial": ([
        "factorial of {n}",
        "what is {n} factorial",
        "compute {n}!",
        "calculate the factorial of {n}",
        "work out the factorial of {n}",
    ], True, True),
    "calculator.sin": ([
        "what is the sine of {angle}",
        "compute sin({angle})",
        "sine of {angle} radians",
        "sin {angle}",
        "evaluate the sine of {angle}",
    ], True, True),
    "calculator.cos": ([
        "what is the cosine of {angle}",
        "compute cos({angle})",
        "cosine of {angle} radians",
        "cos {angle}",
        "evaluate the cosine of {angle}",
    ], True, True),
    "calculator.tan": ([
        "what is the tangent of {angle}",
        "compute tan({angle})",
        "tangent of {angle} radians",
        "tan {angle}",
        "evaluate the tangent of {angle}",
    ], True, True),
    "weather.get_today_weather": ([
        "what's the weather today in {loc}",
        "what is the weather like today in {loc}",
        "today's weather in {loc}",
        "current weather in {loc}",
        "is it raining today in {loc}",
        "what's the weather in {loc}",
    ], True, False),
    "weather.get_weekly_forecast": ([
        "weekly forecast for {loc}",
        "show me the 7-day forecast for {loc}",
        "what's the forecast for the week in {loc}",
        "seven-day forecast in {loc}",
        "give me the weekly weather forecast for {loc}",
    ], True, False),
    "weather.get_air_pollution": ([
        "what's the air quality in {loc}",
        "air pollution index in {loc}",
        "what is the aqi in {loc}",
        "how polluted is the air in {loc}",
        "check the air quality for {loc}",
    ], True, False),
    "notes.create": ([
        "create a note saying {content}",
        "make a new note that says {content}",
        "jot down a note to {content}",
        "note down {content}",
        "take a note saying {content}",
        "write a note about {content}",
    ], True, False),
    "notes.get_all_notes": ([
        "show me all my notes",
        "list my notes",
        "what notes do i have",
        "display all of my notes",
        "pull up my notes",
    ], True, True),
    "notes.delete_note": ([
        "delete my note {id}",
        "remove the note {id}",
        "erase note {id}",
        "trash note number {id}",
        "get rid of my note {id}",
    ], True, True),
    "notes.update_note": ([
        "update my note {id} to say {content}",
        "edit note {id}",
        "change the note {id} to say {content}",
        "revise note number {id}",
        "make note {id} say {content}",
    ], True, False),
    "notification.send_notification": ([
        "send a notification to {name}",
        "push a notification to {name} saying {message}",
        "notify {name} that {message}",
        "dispatch a notification to {name}",
        "fire off a notification to {name} about {message}",
    ], True, False),
    "notification.view_notification": ([
        "show me my notifications",
        "check my notifications",
        "view all my notifications",
        "do i have any new notifications",
        "list the notifications",
    ], True, True),
    "notification.mark_as_read": ([
        "mark the notification {id} as read",
        "mark notification number {id} as read",
        "mark my notification {id} as read",
        "flag notification {id} as read",
        "flag notification {id} as seen",
    ], True, True),
    "notification.delete_notification": ([
        "delete the notification {id}",
        "dismiss notifications {id}",
        "clear all my notifications",
        "remove notifications number {id}",
        "get rid of the notification {id}",
    ], True, True),
    "email.compose_email": ([
        "compose an email to {name}",
        "write an email to {name} about {subject}",
        "draft a new email to {name}",
        "start an email to {name}",
        "compose a mail to {name} about {subject}",
    ], True, False),
    "email.send_email": ([
        "send the email {id}",
        "send email {id}",
        "send my draft email {id}",
        "fire off the email {id}",
        "ship off email {id}",
    ], True, True),
    "email.read_email": ([
        "read my latest email",
        "open email {id}",
        "show me the email {id}",
        "check my inbox",
        "read the email {id}",
    ], True, True),
    "email.reply_email": ([
        "reply to the email {id}",
        "reply to email {id}",
        "respond to the email {id}",
        "send a reply to email {id}",
        "reply to my latest email {id}",
    ], True, True),
    "email.delete_email": ([
        "delete the email {id}",
        "trash email {id}",
        "remove the email {id}",
        "discard this email {id}",
        "get rid of the email {id}",
    ], True, True),
    "calendar.add_event": ([
        "add an event called {title} on {date}",
        "schedule a meeting called {title} at {time}",
        "create an event titled {title} on {date}",
        "book an appointment named {title} on {date}",
        "put a meeting on my calendar",
    ], True, False),
    "calendar.remove_event": ([
        "cancel the meeting {id}",
        "remove event {id}",
        "delete the event {id}",
        "drop appointment {id}",
        "take the event {id} off my calendar",
    ], True, True),
    "calendar.update_event": ([
        "reschedule the meeting {id}",
        "update event {id}",
        "move the event {id}",
        "edit appointment {id}",
        "push the meeting {id} back",
    ], True, True),
    "calendar.view_event": ([
        "what's on my calendar",
        "show me my schedule",
        "check my agenda",
        "what meetings do i have",
        "list my events",
    ], True, True),
    "routes_not_exist.return_invalid_error": ([
        "tell me a joke about {topic}",
        "play some {genre} music",
        "play me a song by the {topic}",
        "what's the capital of {country}",
        "book a flight to {loc}",
        "order some {food} for dinner",
        "recommend a good {food} recipe",
    ], True, True),
}


class GrammarError(KeyError):
    pass


def grammar_targets() -> list[str]:
    return list(_FRAMES.keys())


def covers(module: str, function: str) -> bool:
    return f"{module}.{function}" in _FRAMES


def generate_query(module: str, function: str, rng: random.Random) -> str:
    key = f"{module}.{function}"
    if key not in _FRAMES:
        raise GrammarError(f"grammar does not cover {key}")
    frames, allow_prefix, allow_suffix = _FRAMES[key]
    frame = rng.choice(frames)
    slots = {name: filler(rng) for name, filler in _FILLERS.items()
             if "{" + name + "}" in frame}
    query = frame.format(**slots)
    if allow_prefix:
        query = rng.choice(PREFIXES) + query
    if allow_suffix:
        query = query + rng.choice(SUFFIXES)
    return query.strip()
