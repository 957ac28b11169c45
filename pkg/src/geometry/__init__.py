"""Cross-section eigenbasis and modal field representation"""
