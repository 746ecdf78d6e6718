from pathlib import Path

import pytest

from harmonkit import tablecore
from harmonkit.agent.loop import run_playbook

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

STUDY_COLUMNS = [
    "Country", "Histologic_Grade_FIGO", "Histologic_type", "FIGO_stage", "BMI",
    "Age", "Race", "Ethnicity", "Gender", "Tumor_Focality", "Tumor_Size_cm",
]

VALUE_COLUMNS = [
    "Country", "Histologic_Grade_FIGO", "Histologic_type", "FIGO_stage",
    "Race", "Ethnicity", "Gender", "Tumor_Focality",
]


@pytest.fixture(scope="session")
def dou_table():
    return tablecore.load_table(FIXTURES / "dou.csv", columns=STUDY_COLUMNS)


@pytest.fixture(scope="session")
def vocabulary():
    return tablecore.load_vocabulary(FIXTURES / "gdc_vocabulary.json")


@pytest.fixture(scope="session")
def scripted_run(tmp_path_factory):
    """One scripted dou session, shared by the tests that inspect its outputs."""
    out_dir = tmp_path_factory.mktemp("scripted")
    session = run_playbook(
        FIXTURES / "playbook_dou.json", FIXTURES / "corrections_dou.json", out_dir
    )
    return session, out_dir
