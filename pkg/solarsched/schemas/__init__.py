# solarsched - Schemas Package
# Pydantic models for every domain type
