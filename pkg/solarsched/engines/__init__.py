# solarsched - Engines Package
# Ingestion, prediction, scheduling, reference solving and metrics
