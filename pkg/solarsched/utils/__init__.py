# solarsched - Utils Package
# Logging, configuration files, CLI validation, date windows, synthetic traces and artifact I/O
