# -*- coding: utf-8 -*-
#
# Copyright (C) 2026 nckg-review contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

import os

from nckg.__version__ import __title__, __version__

CKG_NS: str = "http://example.org/NCKG/"
RDF_NS: str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS: str = "http://www.w3.org/2000/01/rdf-schema#"
XSD_NS: str = "http://www.w3.org/2001/XMLSchema#"

DEFAULT_PREFIXES = {
    "ckg": CKG_NS,
    "rdf": RDF_NS,
    "rdfs": RDFS_NS,
    "xsd": XSD_NS,
}

DEFAULT_MAX_DEPTH: int = 8
DEFAULT_TOP_K: int = 2
DEFAULT_MAX_IN_FLIGHT: int = 4
DEFAULT_TIMEOUT: float = 60.0
DEFAULT_MAX_RETRIES: int = 3
DEFAULT_BACKOFF_BASE: float = 1.0
DEFAULT_MODEL: str = "gpt-4o"
DEFAULT_API_KEY_ENV: str = "NCKG_API_KEY"
DEFAULT_ENDPOINT: str = "https://api.openai.com/v1/"

# Upper ontology classes
CONTRACT_ACTOR: str = "ContractActor"
CONTRACT_OBJECT: str = "ContractObject"
CONTRACT_PROPERTY: str = "ContractProperty"
CONTRACT_CONSTRAINT: str = "ContractConstraint"
CONTRACT_EVENT: str = "ContractEvent"
UPPER_CLASSES = (
    CONTRACT_ACTOR,
    CONTRACT_OBJECT,
    CONTRACT_PROPERTY,
    CONTRACT_CONSTRAINT,
    CONTRACT_EVENT,
)

# Relation kinds declared in the ontology
E2E_RELATION: str = "E2ERelation"
E2EVT_RELATION: str = "E2EvtRelation"
EVT2EVT_RELATION: str = "Evt2EvtRelation"

STORE_SUFFIX: str = ".ttls"
STAGING_SUFFIX: str = ".stage.ttls"

PROMPT_VERSION: str = "v1"

DATA_DIR: str = os.path.join(os.path.dirname(__file__), "data")
DEFAULT_ONTOLOGY_PATH: str = os.path.join(DATA_DIR, "ontology.ttls")
PROMPTS_DIR: str = os.path.join(DATA_DIR, "prompts", PROMPT_VERSION)

SUMMARY_WORD_LIMIT: int = 100

USER_AGENT: str = "{}/{}".format(__title__, __version__)
