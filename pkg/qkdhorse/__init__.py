"""
QkdHorse: Ekert Key Distribution with a Time-Slot Trojan Horse
"""
