"""Column layouts of the four public datasets, so user-downloaded copies load as-is.

Each entry lists the expected header, the schema passed to
:func:`~fedkan.data.dataset.load_csv`, and the encoded feature count.
"""

from __future__ import annotations

from .dataset import CsvSchema

GENDER_COLUMNS = [
    "long_hair", "forehead_width_cm", "forehead_height_cm", "nose_wide",
    "nose_long", "lips_thin", "distance_nose_to_lip_long", "gender",
]

AIRLINE_COLUMNS = [
    "", "id", "Gender", "Customer Type", "Age", "Type of Travel", "Class",
    "Flight Distance", "Inflight wifi service", "Departure/Arrival time convenient",
    "Ease of Online booking", "Gate location", "Food and drink", "Online boarding",
    "Seat comfort", "Inflight entertainment", "On-board service", "Leg room service",
    "Baggage handling", "Checkin service", "Inflight service", "Cleanliness",
    "Departure Delay in Minutes", "Arrival Delay in Minutes", "satisfaction",
]

CARDIO_COLUMNS = [
    "id", "age", "gender", "height", "weight", "ap_hi", "ap_lo",
    "cholesterol", "gluc", "smoke", "alco", "active", "cardio",
]

WEATHER_COLUMNS = [
    "Temperature", "Humidity", "Wind Speed", "Precipitation (%)", "Cloud Cover",
    "Atmospheric Pressure", "UV Index", "Season", "Visibility (km)", "Location",
    "Weather Type",
]

SCHEMAS: dict[str, CsvSchema] = {
    "gender": CsvSchema(label_column="gender"),
    # Gender, Customer Type, Type of Travel are binary, Class has 3 levels
    "airline": CsvSchema(
        label_column="satisfaction",
        categorical_columns=("Gender", "Customer Type", "Type of Travel", "Class"),
        drop_columns=("", "id"),
    ),
    # the Kaggle file is semicolon-delimited; cholesterol/gluc stay ordinal
    "cardio": CsvSchema(label_column="cardio", drop_columns=("id",), delimiter=";"),
    "weather": CsvSchema(
        label_column="Weather Type",
        categorical_columns=("Cloud Cover", "Season", "Location"),
    ),
}

# encoded widths when every documented category level is present
FEATURE_COUNTS = {
    "gender": 7,
    "airline": 18 + 2 + 2 + 2 + 3,
    "cardio": 11,
    "weather": 7 + 4 + 4 + 3,
}

CLASS_COUNTS = {"gender": 2, "airline": 2, "cardio": 2, "weather": 4}


def get_schema(name: str) -> CsvSchema:
    try:
        return SCHEMAS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown dataset schema {name!r}; known: {sorted(SCHEMAS)}") from None
