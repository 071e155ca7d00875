"""tweetriage: desk-scale crisis-tweet triage.

Ingests tweet files, classifies help calls (TF-IDF + linear max-margin
model), tags PER/CITY/ADDR/STATUS entities with a from-scratch linear-chain
CRF, normalizes and geocodes addresses, and serves results to a map and
annotation UI over a small REST API.
"""

__version__ = "0.1.0"
